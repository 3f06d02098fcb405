"""Discretization grids for images, detectors and projection angles.

The image domain is the square [-1, 1]^2 (reconstructions live on the unit
ball, but pixels tile the bounding square).  The sinogram domain is
[0, pi) x (-1, 1) with an angular axis and a detector axis.  All types here
are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImageGrid",
    "DetectorGrid",
    "AngleSet",
    "GeometrySpec",
    "Image",
    "Sinogram",
    "make_uniform_angles",
    "pixel_center",
    "detector_center",
    "direction",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out is a:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ImageGrid:
    """Square n_x x n_x pixel grid on [-1, 1]^2 with spacing 2 / n_x.

    Pixel (i, j) has center ((i + 1/2) * delta_x - 1, (j + 1/2) * delta_x - 1);
    index i runs along the x axis, index j along the y axis.
    """

    n_x: int

    def __post_init__(self):
        if not isinstance(self.n_x, (int, np.integer)) or self.n_x < 1:
            raise ValueError(f"n_x must be a positive integer, got {self.n_x!r}")

    @property
    def delta_x(self) -> float:
        return 2.0 / self.n_x

    def centers(self) -> np.ndarray:
        """1-D array of the n_x per-axis center coordinates."""
        return (np.arange(self.n_x) + 0.5) * self.delta_x - 1.0

    def center(self, i: int, j: int) -> tuple[float, float]:
        if not (0 <= i < self.n_x and 0 <= j < self.n_x):
            raise ValueError(f"pixel index ({i}, {j}) out of range for n_x={self.n_x}")
        d = self.delta_x
        return ((i + 0.5) * d - 1.0, (j + 0.5) * d - 1.0)


@dataclass(frozen=True)
class DetectorGrid:
    """Equispaced detector bins on (-1, 1) with spacing 2 / n_s."""

    n_s: int

    def __post_init__(self):
        if not isinstance(self.n_s, (int, np.integer)) or self.n_s < 1:
            raise ValueError(f"n_s must be a positive integer, got {self.n_s!r}")

    @property
    def delta_s(self) -> float:
        return 2.0 / self.n_s

    def centers(self) -> np.ndarray:
        return (np.arange(self.n_s) + 0.5) * self.delta_s - 1.0

    def center(self, p: int) -> float:
        if not 0 <= p < self.n_s:
            raise ValueError(f"detector index {p} out of range for n_s={self.n_s}")
        return (p + 0.5) * self.delta_s - 1.0


@dataclass(frozen=True, eq=False)
class AngleSet:
    """Strictly increasing projection angles in [0, pi) with their pi-periodic cells.

    Each angle phi_q owns the cell between the midpoints to its neighbours,
    where the neighbours wrap pi-periodically (phi_{-1} = phi_{n-1} - pi and
    phi_n = phi_0 + pi).  Cell widths always sum to pi.
    """

    angles: np.ndarray
    cell_widths: np.ndarray | None = None

    def __post_init__(self):
        ang = _readonly(np.atleast_1d(np.asarray(self.angles, dtype=np.float64)))
        if ang.ndim != 1 or ang.size < 1:
            raise ValueError("angles must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(ang)):
            raise ValueError("angles must be finite")
        if np.any(ang < 0.0) or np.any(ang >= np.pi):
            raise ValueError("angles must lie in [0, pi)")
        if ang.size > 1 and np.any(np.diff(ang) <= 0.0):
            raise ValueError("angles must be strictly increasing")
        object.__setattr__(self, "angles", ang)

        if self.cell_widths is None:
            # midpoint cells with pi-periodic wrap for the phantom neighbours
            lo = np.concatenate(([ang[-1] - np.pi], ang[:-1]))
            hi = np.concatenate((ang[1:], [ang[0] + np.pi]))
            widths = 0.5 * (hi - lo)
        else:
            widths = np.asarray(self.cell_widths, dtype=np.float64)
            if widths.shape != ang.shape:
                raise ValueError("cell_widths shape must match angles")
        if np.any(widths <= 0.0):
            raise ValueError("angular cells must have positive width")
        object.__setattr__(self, "cell_widths", _readonly(widths))

    @property
    def n_phi(self) -> int:
        return self.angles.size

    @property
    def delta_phi(self) -> float:
        """Largest angular cell width."""
        return float(np.max(self.cell_widths))


def make_uniform_angles(n_phi: int, offset_fraction: float = 0.0) -> AngleSet:
    """Uniform angles phi_q = pi * (q + offset_fraction) / n_phi.

    Every cell width equals pi / n_phi exactly, independent of the offset.
    An offset_fraction of 0.5 shifts the angles by half a cell, which the
    linear-sinogram experiment uses to cancel the cosine Riemann sum.
    """
    if not isinstance(n_phi, (int, np.integer)) or n_phi < 1:
        raise ValueError(f"n_phi must be a positive integer, got {n_phi!r}")
    if not 0.0 <= offset_fraction < 1.0:
        raise ValueError(f"offset_fraction must lie in [0, 1), got {offset_fraction!r}")
    angles = np.pi * (np.arange(n_phi) + offset_fraction) / n_phi
    widths = np.full(n_phi, np.pi / n_phi)
    return AngleSet(angles, widths)


@dataclass(frozen=True)
class GeometrySpec:
    """Bundle of image grid, detector grid and angle set.

    Owns the three resolutions (delta_x, delta_phi, delta_s).  No relation
    between the resolutions is enforced; balanced versus unbalanced is a
    property of a geometry, not a validity condition.
    """

    image_grid: ImageGrid
    detector_grid: DetectorGrid
    angle_set: AngleSet

    @property
    def delta_x(self) -> float:
        return self.image_grid.delta_x

    @property
    def delta_s(self) -> float:
        return self.detector_grid.delta_s

    @property
    def delta_phi(self) -> float:
        return self.angle_set.delta_phi

    @property
    def n_x(self) -> int:
        return self.image_grid.n_x

    @property
    def n_s(self) -> int:
        return self.detector_grid.n_s

    @property
    def n_phi(self) -> int:
        return self.angle_set.n_phi


@dataclass(frozen=True, eq=False)
class Image:
    """Pixel coefficients of a piecewise constant image.

    values[i, j] is the coefficient of the indicator basis function of pixel
    (i, j); i indexes x, j indexes y.  All values must be finite.
    """

    grid: ImageGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        n = self.grid.n_x
        if v.shape != (n, n):
            raise ValueError(f"values shape {v.shape} does not match grid ({n}, {n})")
        if not np.all(np.isfinite(v)):
            raise ValueError("image values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def zeros(cls, grid: ImageGrid) -> "Image":
        return cls(grid, np.zeros((grid.n_x, grid.n_x)))


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Cellwise constant sinogram; values[q, p] on angular cell q, detector bin p."""

    angle_set: AngleSet
    detector_grid: DetectorGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        shape = (self.angle_set.n_phi, self.detector_grid.n_s)
        if v.shape != shape:
            raise ValueError(f"values shape {v.shape} does not match grids {shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sinogram values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def zeros(cls, angle_set: AngleSet, detector_grid: DetectorGrid) -> "Sinogram":
        return cls(angle_set, detector_grid,
                   np.zeros((angle_set.n_phi, detector_grid.n_s)))


def pixel_center(grid: ImageGrid, i: int, j: int) -> tuple[float, float]:
    """Center of pixel (i, j); raises ValueError for out-of-range indices."""
    return grid.center(i, j)


def detector_center(grid: DetectorGrid, p: int) -> float:
    """Center s_p of detector bin p; raises ValueError for out-of-range p."""
    return grid.center(p)


def direction(phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit direction (cos phi, sin phi) and its 90-degree ccw rotation."""
    if not np.isfinite(phi):
        raise ValueError("angle must be finite")
    c, s = np.cos(phi), np.sin(phi)
    return np.array([c, s]), np.array([-s, c])
