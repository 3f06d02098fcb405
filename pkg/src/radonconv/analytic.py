"""Closed-form references: phantoms, exact backprojections, Riemann sums.

The three sinogram phantoms have elementary exact backprojections (a
constant pi, a constant 1, and the linear field 2y), which make them sharp
probes of how well a discretized backprojector resolves the angular
integral.  The disk phantom has the classical chord-length sinogram and
serves as the forward-operator reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import AngleSet, DetectorGrid, ImageGrid, Image, Sinogram

__all__ = [
    "Disk",
    "UniformSinogram",
    "SingleAngleSinogram",
    "LinearSinogram",
    "Phantom",
    "UnsupportedPhantomError",
    "disk_sinogram",
    "exact_backprojection",
    "backprojection_field",
    "riemann_cos_sum",
    "riemann_sin_sum",
    "predicted_example3_error_field",
    "render_sinogram",
    "render_image",
]


class UnsupportedPhantomError(ValueError):
    """No closed form is provided for the requested phantom/operation pair."""


@dataclass(frozen=True)
class Disk:
    """Indicator of a disk; kept inside B(0, 0.9) away from the domain boundary."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        cx, cy = self.center
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        if math.hypot(cx, cy) + self.radius > 0.9:
            raise ValueError("disk must satisfy |center| + radius <= 0.9")


@dataclass(frozen=True)
class UniformSinogram:
    """Constant sinogram g = level; exact backprojection is pi * level."""

    level: float = 1.0


@dataclass(frozen=True)
class SingleAngleSinogram:
    """Sinogram 1/|Phi_qhat| on one angular cell; exact backprojection is 1.

    The amplitude is the reciprocal cell width, so the angular integral over
    the single cell is exactly one regardless of the angle count.
    """

    q_hat: int

    def __post_init__(self):
        if self.q_hat < 0:
            raise ValueError(f"q_hat must be nonnegative, got {self.q_hat!r}")


@dataclass(frozen=True)
class LinearSinogram:
    """Sinogram g(phi, s) = s; exact backprojection is 2y."""


Phantom = Disk | UniformSinogram | SingleAngleSinogram | LinearSinogram


def disk_sinogram(center: tuple[float, float], radius: float, phi: float,
                  s: float | np.ndarray) -> float | np.ndarray:
    """Chord length of the line (phi, s) through the disk.

    2 * sqrt(max(0, r^2 - (s - center . theta_phi)^2)); accepts an array of
    detector offsets.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    proj = center[0] * math.cos(phi) + center[1] * math.sin(phi)
    d = np.asarray(s, dtype=np.float64) - proj
    out = 2.0 * np.sqrt(np.maximum(radius * radius - d * d, 0.0))
    return float(out) if np.isscalar(s) else out


def backprojection_field(phantom: Phantom, x: np.ndarray,
                         y: np.ndarray) -> np.ndarray:
    """Exact backprojection evaluated on broadcastable coordinate arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    shape = np.broadcast_shapes(x.shape, y.shape)
    if isinstance(phantom, UniformSinogram):
        return np.full(shape, np.pi * phantom.level)
    if isinstance(phantom, SingleAngleSinogram):
        return np.ones(shape)
    if isinstance(phantom, LinearSinogram):
        return np.broadcast_to(2.0 * y, shape).copy()
    raise UnsupportedPhantomError(
        f"no closed-form backprojection for {phantom!r}")


def exact_backprojection(phantom: Phantom, x: tuple[float, float]) -> float:
    """Exact backprojection at a single point (pi, 1, or 2y)."""
    return float(backprojection_field(phantom, np.asarray(x[0]),
                                      np.asarray(x[1])))


def riemann_cos_sum(angle_set: AngleSet) -> float:
    """Width-weighted Riemann sum of the cosine integral over [0, pi) (exact value 0)."""
    return float(np.sum(angle_set.cell_widths * np.cos(angle_set.angles)))


def riemann_sin_sum(angle_set: AngleSet) -> float:
    """Width-weighted Riemann sum of the sine integral over [0, pi) (exact value 2)."""
    return float(np.sum(angle_set.cell_widths * np.sin(angle_set.angles)))


def predicted_example3_error_field(angle_set: AngleSet,
                                   x: tuple[float, float]) -> float:
    """Predicted pointwise error of the pixel-driven backprojection of g = s.

    The hat interpolation reproduces the linear sinogram exactly, so the
    entire error is the Riemann-sum defect of the two angular integrals:
    -x * cos_sum + y * (2 - sin_sum).
    """
    cs = riemann_cos_sum(angle_set)
    ss = riemann_sin_sum(angle_set)
    return -float(x[0]) * cs + float(x[1]) * (2.0 - ss)


def render_sinogram(phantom: Phantom, angle_set: AngleSet,
                    detector_grid: DetectorGrid) -> Sinogram:
    """Cellwise representation of a sinogram phantom on the given grids."""
    n_phi = angle_set.n_phi
    n_s = detector_grid.n_s
    if isinstance(phantom, UniformSinogram):
        values = np.full((n_phi, n_s), phantom.level)
    elif isinstance(phantom, SingleAngleSinogram):
        if phantom.q_hat >= n_phi:
            raise ValueError(
                f"q_hat={phantom.q_hat} out of range for n_phi={n_phi}")
        values = np.zeros((n_phi, n_s))
        values[phantom.q_hat, :] = 1.0 / angle_set.cell_widths[phantom.q_hat]
    elif isinstance(phantom, LinearSinogram):
        # the average of s over a detector cell equals the cell center, so
        # the cellwise values coincide with point samples at the centers
        values = np.tile(detector_grid.centers(), (n_phi, 1))
    else:
        raise UnsupportedPhantomError(f"{phantom!r} is not a sinogram phantom")
    return Sinogram(angle_set, detector_grid, values)


def render_image(phantom: Disk, grid: ImageGrid) -> Image:
    """Pixel values of the disk indicator sampled at pixel centers."""
    if not isinstance(phantom, Disk):
        raise UnsupportedPhantomError(f"{phantom!r} is not an image phantom")
    xs = grid.centers()
    dx2 = (xs - phantom.center[0])[:, None] ** 2
    dy2 = (xs - phantom.center[1])[None, :] ** 2
    values = (dx2 + dy2 <= phantom.radius * phantom.radius).astype(np.float64)
    return Image(grid, values)
