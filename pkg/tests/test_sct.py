import numpy as np
import pytest

from backend.errors import DomainError
from backend.forward import disk_scattering_coefficient
from backend.geometry import RigidTransform, make_shape, transform
from backend.sct import (
    ScatteringCoeffMatrix,
    compute_w,
    fit_decay_constant,
    rotate_w,
    scale_law_check,
    translate_w,
)

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def disk_w(disk, medium):
    return compute_w(disk, medium, TWO_PI, 10)


def test_disk_w_is_diagonal(disk_w):
    off_diagonal = disk_w.values - np.diag(np.diag(disk_w.values))
    assert np.abs(off_diagonal).max() < 1e-8


def test_disk_diagonal_matches_separation_of_variables(disk_w, medium):
    beta = disk_scattering_coefficient(disk_w.orders, 0.5, medium, TWO_PI)
    np.testing.assert_allclose(np.diag(disk_w.values), 4j * beta, rtol=1e-6, atol=1e-10)


def test_entry_indexing(disk_w):
    assert disk_w.entry(0, 0) == disk_w.values[10, 10]
    assert disk_w.entry(-10, 10) == disk_w.values[0, 20]


def test_truncate(flower_w):
    small = flower_w.truncate(5)
    assert small.K == 5
    np.testing.assert_array_equal(small.values, flower_w.values[25:36, 25:36])
    with pytest.raises(DomainError):
        small.truncate(6)


def test_shape_checked():
    with pytest.raises(DomainError):
        ScatteringCoeffMatrix(values=np.zeros((3, 3)), K=2, omega=1.0)


def test_rotation_identities(flower_w):
    np.testing.assert_array_equal(rotate_w(flower_w, 0.0).values, flower_w.values)
    np.testing.assert_allclose(rotate_w(flower_w, TWO_PI).values, flower_w.values, rtol=1e-13, atol=0)


def test_rotation_matches_recomputation(flower, medium):
    theta = np.pi / 3
    w = compute_w(flower, medium, TWO_PI, 10)
    rotated = compute_w(transform(flower, RigidTransform(theta=theta)), medium, TWO_PI, 10)
    assert np.abs(rotate_w(w, theta).values - rotated.values).max() < 1e-6


def test_translation_by_zero_is_identity(flower_w, medium):
    moved, _ = translate_w(flower_w, (0.0, 0.0), medium.k0(TWO_PI), 30, margin=0)
    np.testing.assert_allclose(moved.values, flower_w.values, rtol=0, atol=1e-15)


def test_translation_round_trip(flower_w, medium):
    k0 = medium.k0(TWO_PI)
    z = np.array([0.3, -0.2])
    there, _ = translate_w(flower_w, z, k0, 20)
    back, _ = translate_w(there, -z, k0, 10)
    reference = flower_w.truncate(10).values
    assert np.abs(back.values - reference).max() < 1e-8 * np.abs(reference).max()


def test_translation_matches_recomputation(flower, flower_w, medium):
    z = (-0.5, 0.5)
    moved, tail = translate_w(flower_w, z, medium.k0(TWO_PI), 10)
    direct = compute_w(transform(flower, RigidTransform(z=z)), medium, TWO_PI, 10)
    assert np.abs(moved.values - direct.values).max() < 1e-6 * max(1.0, np.abs(direct.values).max())
    assert tail < 1e-6


def test_small_margin_is_logged(flower_w, medium, caplog):
    translate_w(flower_w, (0.1, 0.0), medium.k0(TWO_PI), 25)
    assert "margin" in caplog.text


def test_scale_law_identity(flower, medium):
    assert scale_law_check(flower, medium, np.pi, 1.0, 5) == 0.0


@pytest.mark.parametrize("name, s, omega", [("flower", 1.5, TWO_PI), ("disk", 2.0, np.pi)])
def test_scale_law(medium, name, s, omega):
    assert scale_law_check(make_shape(name, 256), medium, omega, s, 10) < 1e-6


def test_scaled_disk_matches_separation_of_variables(disk, medium):
    w = compute_w(transform(disk, RigidTransform(s=2.0)), medium, np.pi, 6)
    beta = disk_scattering_coefficient(w.orders, 1.0, medium, np.pi)
    np.testing.assert_allclose(np.diag(w.values), 4j * beta, rtol=1e-6, atol=1e-10)


def test_decay_constant_bounds_entries(flower_w):
    c = fit_decay_constant(flower_w)
    m = np.abs(flower_w.orders)
    mm, nn = np.meshgrid(m, m, indexing="ij")
    with np.errstate(divide="ignore"):
        envelope = c ** (mm + nn) / (np.where(mm > 0, mm, 1.0) ** mm * np.where(nn > 0, nn, 1.0) ** nn)
    magnitude = np.abs(flower_w.values)
    fitted = (mm + nn > 0) & (magnitude > 1e-12 * magnitude.max())
    assert np.all(magnitude[fitted] <= envelope[fitted] * (1 + 1e-9))


def test_decay_constant_is_stable_in_order(flower_w):
    assert fit_decay_constant(flower_w.truncate(15)) == pytest.approx(
        fit_decay_constant(flower_w.truncate(12)), rel=0.1)


def test_negative_order_rejected(flower, medium):
    with pytest.raises(DomainError):
        compute_w(flower, medium, np.pi, -1)
