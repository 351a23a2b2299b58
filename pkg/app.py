import logging

import click

from backend.config import load_config
from backend.errors import ScatteringError
from frontend.dictionary import run_build_dict
from frontend.identify import run_identify
from frontend.reconstruct import run_reconstruct
from frontend.simulate import run_simulate
from frontend.spectrum import run_spectrum

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def common_options(func):
    """--config, --out, --seed and --threads, shared by every subcommand."""
    func = click.option('--threads', type=int, default=1, show_default=True,
                        help='Parallel workers for frequencies and dictionary entries.')(func)
    func = click.option('--seed', type=int, default=None, help='Overrides the config seed.')(func)
    func = click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
                        help='Output directory (overrides output_dir of the config).')(func)
    func = click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                        required=True, help='Experiment config (JSON).')(func)
    return func


def run_view(view, config_path, out_dir, seed, threads):
    overrides = {'seed': seed, 'output_dir': out_dir}
    try:
        config = load_config(config_path, overrides)
        return view(config, config.output_dir, threads)
    except ScatteringError as e:
        raise click.ClickException(str(e)) from e


@click.group()
@click.option('--log-level', default='INFO', show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']))
def cli(log_level):
    """Shape identification from multistatic response measurements."""
    logging.basicConfig(level=getattr(logging, log_level), format=LOG_FORMAT)


@cli.command()
@common_options
def simulate(config_path, out_dir, seed, threads):
    """Simulate noisy MSR matrices over the frequency grid."""
    run_view(run_simulate, config_path, out_dir, seed, threads)


@cli.command()
@common_options
def reconstruct(config_path, out_dir, seed, threads):
    """Reconstruct scattering coefficients from the simulated MSR set."""
    run_view(run_reconstruct, config_path, out_dir, seed, threads)


@cli.command('build-dict')
@common_options
def build_dict(config_path, out_dir, seed, threads):
    """Precompute the descriptor dictionary."""
    run_view(run_build_dict, config_path, out_dir, seed, threads)


@cli.command()
@common_options
def identify(config_path, out_dir, seed, threads):
    """Identify the configured targets against the dictionary."""
    run_view(run_identify, config_path, out_dir, seed, threads)


@cli.command()
@common_options
def spectrum(config_path, out_dir, seed, threads):
    """Singular values of the acquisition operator."""
    run_view(run_spectrum, config_path, out_dir, seed, threads)


if __name__ == '__main__':
    cli()
