import numpy as np
import pytest

from radonconv.analytic import (Disk, LinearSinogram, SingleAngleSinogram,
                                UniformSinogram, UnsupportedPhantomError,
                                backprojection_field, disk_sinogram,
                                exact_backprojection,
                                predicted_example3_error_field,
                                render_image, render_sinogram,
                                riemann_cos_sum, riemann_sin_sum)
from radonconv.grid import DetectorGrid, ImageGrid, make_uniform_angles


def test_disk_sinogram_values():
    assert disk_sinogram((0.0, 0.0), 0.5, 0.3, 0.0) == pytest.approx(1.0)
    assert disk_sinogram((0.0, 0.0), 0.5, 1.2, 0.5) == 0.0
    assert disk_sinogram((0.2, 0.0), 0.3, 0.0, 0.2) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        disk_sinogram((0.0, 0.0), 0.0, 0.0, 0.0)


def test_disk_sinogram_against_line_quadrature():
    # Riemann sum of the disk indicator along the line
    center, radius = (0.2, 0.0), 0.3
    phi, s = 0.0, 0.2
    ts = np.linspace(-1.0, 1.0, 1_000_001)
    pts_x = s * np.cos(phi) - ts * np.sin(phi)
    pts_y = s * np.sin(phi) + ts * np.cos(phi)
    inside = (pts_x - center[0]) ** 2 + (pts_y - center[1]) ** 2 <= radius ** 2
    quad = float(np.sum(inside)) * (ts[1] - ts[0])
    assert disk_sinogram(center, radius, phi, s) == pytest.approx(quad, abs=1e-4)


def test_disk_sinogram_depends_only_on_abs_offset_when_centered():
    rng = np.random.default_rng(9)
    for _ in range(50):
        phi = rng.uniform(0.0, np.pi)
        s = rng.uniform(0.0, 0.6)
        a = disk_sinogram((0.0, 0.0), 0.45, phi, s)
        b = disk_sinogram((0.0, 0.0), 0.45, phi, -s)
        c = disk_sinogram((0.0, 0.0), 0.45, rng.uniform(0.0, np.pi), s)
        assert a == pytest.approx(b) and a == pytest.approx(c)


def test_disk_validation():
    with pytest.raises(ValueError):
        Disk((0.5, 0.5), 0.3)  # |center| + radius > 0.9
    with pytest.raises(ValueError):
        Disk((0.0, 0.0), -0.1)
    Disk((0.2, 0.1), 0.3)


def test_exact_backprojection():
    assert exact_backprojection(UniformSinogram(1.0), (0.3, -0.2)) == pytest.approx(np.pi)
    assert exact_backprojection(UniformSinogram(2.5), (0.0, 0.0)) == pytest.approx(2.5 * np.pi)
    assert exact_backprojection(SingleAngleSinogram(3), (0.7, 0.7)) == 1.0
    assert exact_backprojection(LinearSinogram(), (0.1, 0.4)) == pytest.approx(0.8)
    with pytest.raises(UnsupportedPhantomError):
        exact_backprojection(Disk((0.0, 0.0), 0.5), (0.0, 0.0))


def test_backprojection_field_broadcasts():
    xs = np.linspace(-0.5, 0.5, 7)
    field = backprojection_field(LinearSinogram(), xs[:, None], xs[None, :])
    assert field.shape == (7, 7)
    assert np.allclose(field, 2.0 * xs[None, :])


def test_riemann_sums_naive_180():
    a = make_uniform_angles(180)
    assert riemann_cos_sum(a) == pytest.approx(np.pi / 180, abs=1e-6)
    assert riemann_sin_sum(a) == pytest.approx(1.99995, abs=1e-5)


def test_riemann_sums_shifted_180():
    a = make_uniform_angles(180, 0.5)
    assert abs(riemann_cos_sum(a)) <= 1e-14
    assert riemann_sin_sum(a) - 2.0 == pytest.approx(2.54e-5, rel=0.05)


def test_riemann_sums_first_order_convergence():
    errors = [abs(riemann_cos_sum(make_uniform_angles(n))) for n in
              (45, 90, 180, 360, 720)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(1.7 <= r <= 2.3 for r in ratios)
    sin_errors = [abs(riemann_sin_sum(make_uniform_angles(n)) - 2.0)
                  for n in (45, 90, 180, 360)]
    assert all(a > b for a, b in zip(sin_errors, sin_errors[1:]))


def test_predicted_error_field_values():
    a = make_uniform_angles(360)
    assert predicted_example3_error_field(a, (0.5, 0.0)) == pytest.approx(
        -0.5 * np.pi / 360, rel=1e-10)
    assert predicted_example3_error_field(a, (0.0, 0.0)) == 0.0

    shifted = make_uniform_angles(360, 0.5)
    # direct summation oracle for the shifted sine Riemann sum
    direct = float(np.sum(np.full(360, np.pi / 360)
                          * np.sin(shifted.angles)))
    expected = 0.5 * (2.0 - direct)
    got = predicted_example3_error_field(shifted, (0.0, 0.5))
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(-3.17e-6, rel=0.05)


def test_render_sinogram_representations():
    angles = make_uniform_angles(8)
    det = DetectorGrid(16)
    uni = render_sinogram(UniformSinogram(3.0), angles, det)
    assert np.all(uni.values == 3.0)

    single = render_sinogram(SingleAngleSinogram(5), angles, det)
    expected = 8 / np.pi  # 1 / |Phi_qhat| for uniform cells
    assert np.allclose(single.values[5], expected)
    mask = np.ones(8, dtype=bool)
    mask[5] = False
    assert np.all(single.values[mask] == 0.0)
    with pytest.raises(ValueError):
        render_sinogram(SingleAngleSinogram(8), angles, det)

    lin = render_sinogram(LinearSinogram(), angles, det)
    assert np.array_equal(lin.values[0], det.centers())
    assert np.array_equal(lin.values[3], det.centers())

    with pytest.raises(UnsupportedPhantomError):
        render_sinogram(Disk((0.0, 0.0), 0.5), angles, det)


def test_render_image_disk_indicator():
    grid = ImageGrid(64)
    img = render_image(Disk((0.0, 0.0), 0.5), grid)
    xs = grid.centers()
    r2 = xs[:, None] ** 2 + xs[None, :] ** 2
    assert np.array_equal(img.values, (r2 <= 0.25).astype(float))
    # area of the indicator approaches the disk area
    area = float(img.values.sum()) * grid.delta_x ** 2
    assert area == pytest.approx(np.pi * 0.25, rel=0.05)