import numpy as np
import pytest

from backend import forward
from backend.errors import AcquisitionError, DomainError, NearResonanceError
from backend.forward import (
    AcquisitionConfig,
    BoundarySolver,
    Medium,
    MSRMatrix,
    add_noise,
    cylindrical_wave_data,
    disk_density,
    disk_scattered_field,
    evaluate_scattered,
    plane_wave_data,
    simulate_msr,
    solve_densities,
    wrapped_distance,
)
from backend.geometry import RigidTransform, make_shape, transform
from frontend.simulate import simulate_one

TWO_PI = 2.0 * np.pi


@pytest.mark.parametrize("omega", [np.pi, TWO_PI])
@pytest.mark.parametrize("m", [0, 1, 3, -2])
def test_disk_densities_match_separation_of_variables(disk, medium, omega, m):
    u, dnu = cylindrical_wave_data(disk, medium.k0(omega), [m])
    phi, psi = solve_densities(disk, medium, omega, u, dnu)
    exact_phi, exact_psi = disk_density(m, 0.5, medium, omega, disk.parameters)
    np.testing.assert_allclose(psi[:, 0], exact_psi, rtol=1e-6, atol=1e-6 * np.abs(exact_psi).max())
    np.testing.assert_allclose(phi[:, 0], exact_phi, rtol=1e-6, atol=1e-6 * np.abs(exact_phi).max())


def test_disk_scattered_field_matches_series(disk, medium):
    omega = TWO_PI
    k0 = medium.k0(omega)
    angles = np.linspace(0.0, TWO_PI, 24, endpoint=False)
    x = 3.0 * np.column_stack([np.cos(angles), np.sin(angles)])
    source_angle = 0.7
    direction = np.array([[np.cos(source_angle), np.sin(source_angle)]])
    _, psi = solve_densities(disk, medium, omega, *plane_wave_data(disk, k0, direction))
    field, near = evaluate_scattered(disk, psi[:, 0], k0, x)
    exact = disk_scattered_field(x, 0.5, medium, omega, source_angle)
    assert not near.any()
    assert np.max(np.abs(field - exact)) < 1e-6 * np.max(np.abs(exact))


def test_disk_mode_purity(disk, medium):
    omega = TWO_PI
    u, dnu = cylindrical_wave_data(disk, medium.k0(omega), [2])
    _, psi = solve_densities(disk, medium, omega, u, dnu)
    coefficients = np.fft.fft(psi[:, 0]) / disk.n_points
    leaked = np.delete(np.abs(coefficients), 2)
    assert leaked.max() < 1e-10 * np.abs(coefficients[2])


def test_zero_data_gives_zero_densities(flower, medium):
    zero = np.zeros((flower.n_points, 1), dtype=complex)
    phi, psi = solve_densities(flower, medium, np.pi, zero, zero)
    assert not phi.any() and not psi.any()


def test_field_approaches_far_field(flower, medium):
    omega = TWO_PI
    k0 = medium.k0(omega)
    direction = np.array([[1.0, 0.0]])
    _, psi = solve_densities(flower, medium, omega, *plane_wave_data(flower, k0, direction))
    x_hat = np.array([np.cos(2.0), np.sin(2.0)])
    scaled = []
    for R in (50.0, 100.0, 200.0):
        value, _ = evaluate_scattered(flower, psi[:, 0], k0, R * x_hat)
        scaled.append(value[0] * np.sqrt(R) * np.exp(-1j * k0 * R))
    first, second = abs(scaled[1] - scaled[0]), abs(scaled[2] - scaled[1])
    assert second < 0.6 * first


def test_disk_msr_matches_series_and_is_symmetric(disk, medium):
    acq = AcquisitionConfig(R=3.0, Ns=16, Nr=16)
    v = simulate_msr(disk, medium, acq, TWO_PI)
    expected = np.stack([
        disk_scattered_field(acq.receivers, 0.5, medium, TWO_PI, angle)
        for angle in acq.source_angles
    ])
    scale = np.abs(expected).max()
    assert np.max(np.abs(v.values - expected)) < 1e-6 * scale
    assert np.max(np.abs(v.values - v.values.T)) < 1e-6 * scale


def test_msr_translation_covariance(flower, medium):
    z0 = np.array([0.3, -0.2])
    omega = TWO_PI
    shifted = AcquisitionConfig(R=3.0, z0=tuple(z0), Ns=16, Nr=12)
    centred = AcquisitionConfig(R=3.0, Ns=16, Nr=12)
    v = simulate_msr(flower, medium, shifted, omega)
    moved = transform(flower, RigidTransform(z=tuple(-z0)))
    v_centred = simulate_msr(moved, medium, centred, omega)
    phase = np.exp(1j * medium.k0(omega) * centred.source_directions @ z0)
    expected = phase[:, None] * v_centred.values
    assert np.max(np.abs(v.values - expected)) < 1e-8 * np.abs(expected).max()


def test_quadrature_convergence(medium):
    acq = AcquisitionConfig(R=3.0, Ns=12, Nr=12)
    for name, omega in (("flower", np.pi), ("ellipse", TWO_PI)):
        coarse = simulate_msr(make_shape(name, 256), medium, acq, omega).values
        fine = simulate_msr(make_shape(name, 512), medium, acq, omega).values
        assert np.max(np.abs(coarse - fine)) < 1e-6 * np.abs(fine).max()


def test_msr_amplitude_decays_like_inverse_sqrt_radius(disk, medium):
    near = simulate_msr(disk, medium, AcquisitionConfig(R=20.0, Ns=8, Nr=8), TWO_PI)
    far = simulate_msr(disk, medium, AcquisitionConfig(R=40.0, Ns=8, Nr=8), TWO_PI)
    ratio = np.abs(near.values).max() / np.abs(far.values).max()
    assert ratio == pytest.approx(np.sqrt(2.0), rel=0.05)


def test_receivers_must_enclose_inclusion(flower, medium):
    with pytest.raises(AcquisitionError):
        simulate_msr(flower, medium, AcquisitionConfig(R=0.6, Ns=4, Nr=4), np.pi)


def test_evaluation_inside_is_rejected(flower, medium):
    psi = np.zeros(flower.n_points, dtype=complex)
    with pytest.raises(DomainError):
        evaluate_scattered(flower, psi, medium.k0(np.pi), np.zeros((1, 2)))


def test_evaluation_close_to_boundary_is_flagged(disk, medium):
    psi = np.ones(disk.n_points, dtype=complex)
    _, near = evaluate_scattered(disk, psi, medium.k0(np.pi), np.array([[0.501, 0.0], [2.0, 0.0]]))
    assert near.tolist() == [True, False]


def random_msr(acq, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((acq.Ns, acq.Nr)) + 1j * rng.standard_normal((acq.Ns, acq.Nr))
    return MSRMatrix(values=values, omega=np.pi, acquisition=acq, perimeter=4.0)


def test_noise_level_matches_definition():
    acq = AcquisitionConfig(Ns=16, Nr=16)
    v = random_msr(acq)
    sigma0 = 0.3
    energies = []
    for seed in range(100):
        noisy = add_noise(v, sigma0, seed)
        energies.append(np.sum(np.abs(noisy.values - v.values) ** 2))
    sigma = sigma0 * np.linalg.norm(v.values) / np.sqrt(v.values.size)
    assert np.mean(energies) == pytest.approx(sigma**2 * v.values.size, rel=0.05)
    assert noisy.noise_sigma == pytest.approx(sigma)


def test_noise_is_reproducible():
    v = random_msr(AcquisitionConfig(Ns=8, Nr=8))
    np.testing.assert_array_equal(add_noise(v, 0.2, 11).values, add_noise(v, 0.2, 11).values)
    assert not np.array_equal(add_noise(v, 0.2, 11).values, add_noise(v, 0.2, 12).values)


def test_zero_noise_is_identity():
    v = random_msr(AcquisitionConfig(Ns=8, Nr=8))
    noisy = add_noise(v, 0.0, 3)
    np.testing.assert_array_equal(noisy.values, v.values)
    assert noisy.snr == float("inf")


def test_snr_metadata():
    v = add_noise(random_msr(AcquisitionConfig(R=4.0, Ns=8, Nr=8)), 0.5, 0)
    assert v.snr == pytest.approx(4.0 / 2.0 / v.noise_sigma)


def test_negative_noise_rejected():
    with pytest.raises(DomainError):
        add_noise(random_msr(AcquisitionConfig(Ns=4, Nr=4)), -0.1, 0)


def test_noise_spares_unmeasured_entries():
    acq = AcquisitionConfig(Ns=20, Nr=20, aperture=np.pi / 2, n_groups=4)
    v = random_msr(acq)
    v = MSRMatrix(values=np.where(acq.mask, v.values, 0.0), omega=v.omega, acquisition=acq)
    noisy = add_noise(v, 0.5, 1)
    assert not noisy.values[~acq.mask].any()
    assert np.isfinite(noisy.values).all()


def test_full_view_mask():
    assert AcquisitionConfig(Ns=10, Nr=7).mask.all()


def test_grouped_mask_pairs_share_a_group():
    acq = AcquisitionConfig(Ns=40, Nr=40, aperture=2 * np.pi / 5, n_groups=5)
    mask = acq.mask
    assert not mask.all() and mask.any()
    # diametrically opposite source and receiver never share a group
    assert not mask[9, 29]
    # a source and receiver at a group centre always do
    assert mask[39, 39]
    assert mask.sum() < 0.5 * mask.size


def test_band_mask_covers_band():
    alpha = np.pi / 3
    acq = AcquisitionConfig(R=10.0, Ns=64, Nr=64, aperture=alpha, n_groups=64)
    d = wrapped_distance(acq.source_angles[:, None], acq.receiver_angles[None, :])
    assert acq.mask[d <= alpha + 1e-12].all()


@pytest.mark.parametrize("kwargs", [
    {"R": 0.0},
    {"Ns": 0},
    {"aperture": 0.0},
    {"aperture": 7.0},
    {"n_groups": 0},
])
def test_invalid_acquisition(kwargs):
    with pytest.raises(AcquisitionError):
        AcquisitionConfig(**kwargs)


def test_msr_shape_checked():
    with pytest.raises(AcquisitionError):
        MSRMatrix(values=np.zeros((3, 3)), omega=1.0, acquisition=AcquisitionConfig(Ns=4, Nr=3))


def test_medium_wavenumbers():
    med = Medium()
    assert med.k(TWO_PI) == pytest.approx(3 * TWO_PI)
    assert med.k0(TWO_PI) == pytest.approx(TWO_PI)
    with pytest.raises(DomainError):
        Medium(eps_star=0.0)


def test_ill_conditioned_system_is_rejected(disk, medium, monkeypatch):
    monkeypatch.setattr(forward, "CONDITION_LIMIT", 1.0)
    with pytest.raises(NearResonanceError) as info:
        BoundarySolver(disk, medium, TWO_PI)
    assert info.value.omega == TWO_PI
    assert info.value.condition > 1.0
    assert "near resonance" in str(info.value)


def test_failed_frequency_is_skipped(disk, medium, monkeypatch):
    monkeypatch.setattr(forward, "CONDITION_LIMIT", 1.0)
    acq = AcquisitionConfig(R=3.0, Ns=8, Nr=8)
    assert simulate_one(disk, medium, acq, TWO_PI, 0.1, 0) is None
