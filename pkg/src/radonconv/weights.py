"""Ray-driven and pixel-driven weight functions and a geometric oracle.

The ray-driven weight is a closed form of the line/pixel intersection length:
delta_x^2 * ray_weight(phi, x . theta_phi - s) equals the length of the
intersection of the line with offset s and the pixel centered at x.  The
pixel-driven weight is the linear interpolation hat on the detector axis.
``intersection_length`` computes the same geometric quantity by clipping the
line against the pixel faces and is kept independent of the closed form so
the two can cross-validate each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ImageGrid

__all__ = [
    "RayWeightParams",
    "RayDriven",
    "PixelDriven",
    "WeightFunction",
    "Line",
    "ray_weight",
    "pixel_weight",
    "intersection_length",
    "intersection_lengths_grid",
    "weight_support_radius",
]

# Below this fraction of delta_x the ramp interval [s_under, s_bar) has
# collapsed and the angle is treated as axis aligned; the ramp formula would
# otherwise divide by |cos * sin| -> 0 on an interval of vanishing width.
RAMP_COLLAPSE_FACTOR = 1e-14


@dataclass(frozen=True)
class RayWeightParams:
    """Angle-dependent parameters of the ray-driven weight.

    s_bar bounds the support, s_under bounds the plateau, and kappa is the
    plateau height times delta_x.  kappa is computed as
    1 / max(|cos|, |sin|), which equals the minimum of the two reciprocals
    without ever forming 1/0.
    """

    s_bar: float
    s_under: float
    kappa: float

    @classmethod
    def from_angle(cls, phi: float, delta_x: float) -> "RayWeightParams":
        if delta_x <= 0.0:
            raise ValueError(f"delta_x must be positive, got {delta_x!r}")
        ca = abs(math.cos(phi))
        sa = abs(math.sin(phi))
        return cls(
            s_bar=0.5 * delta_x * (ca + sa),
            s_under=0.5 * delta_x * abs(ca - sa),
            kappa=1.0 / max(ca, sa),
        )


def _ray_eval_params(phi: float, delta_x: float):
    """(s_bar, s_under, plateau, inv_ramp_den, axis_like) for one angle."""
    ca = abs(math.cos(phi))
    sa = abs(math.sin(phi))
    s_bar = 0.5 * delta_x * (ca + sa)
    s_under = 0.5 * delta_x * abs(ca - sa)
    plateau = (1.0 / max(ca, sa)) / delta_x
    axis_like = (s_bar - s_under) <= RAMP_COLLAPSE_FACTOR * delta_x
    inv_den = 0.0 if axis_like else 1.0 / (delta_x * delta_x * ca * sa)
    return s_bar, s_under, plateau, inv_den, axis_like


def ray_param_arrays(phis: np.ndarray, delta_x: float):
    """Vectorized ``_ray_eval_params`` over an angle array (kernel inputs)."""
    ca = np.abs(np.cos(phis))
    sa = np.abs(np.sin(phis))
    s_bar = 0.5 * delta_x * (ca + sa)
    s_under = 0.5 * delta_x * np.abs(ca - sa)
    plateau = (1.0 / np.maximum(ca, sa)) / delta_x
    axis_like = (s_bar - s_under) <= RAMP_COLLAPSE_FACTOR * delta_x
    inv_den = np.zeros_like(s_bar)
    ok = ~axis_like
    inv_den[ok] = 1.0 / (delta_x * delta_x * ca[ok] * sa[ok])
    return s_bar, s_under, plateau, inv_den, axis_like


def ray_weight(phi: float, t: float, delta_x: float) -> float:
    """Ray-driven weight at signed detector offset t.

    Piecewise: a plateau of height kappa/delta_x for |t| < s_under, a linear
    ramp down to zero on [s_under, s_bar), the half-plateau tie value at
    |t| = s_bar for axis-aligned angles, and zero otherwise.
    """
    if delta_x <= 0.0:
        raise ValueError(f"delta_x must be positive, got {delta_x!r}")
    s_bar, s_under, plateau, inv_den, axis_like = _ray_eval_params(phi, delta_x)
    at = abs(t)
    if at < s_under:
        return plateau
    if not axis_like and at < s_bar:
        return (s_bar - at) * inv_den
    if axis_like and at == s_bar:
        return 0.5 * plateau
    return 0.0


def pixel_weight(t: float, delta_s: float) -> float:
    """Pixel-driven hat weight max(delta_s - |t|, 0) / delta_s^2."""
    if delta_s <= 0.0:
        raise ValueError(f"delta_s must be positive, got {delta_s!r}")
    return max(delta_s - abs(t), 0.0) / (delta_s * delta_s)


@dataclass(frozen=True)
class Line:
    """Line with angle phi in [0, pi) and signed detector offset s in (-1, 1).

    Parametrized as s * theta_phi + t * theta_phi_perp for t in R.
    """

    phi: float
    s: float

    def __post_init__(self):
        if not (np.isfinite(self.phi) and 0.0 <= self.phi < np.pi):
            raise ValueError(f"line angle must lie in [0, pi), got {self.phi!r}")
        if not (np.isfinite(self.s) and abs(self.s) < 1.0):
            raise ValueError(f"line offset must lie in (-1, 1), got {self.s!r}")


def intersection_length(pixel_center: tuple[float, float], delta_x: float,
                        line: Line) -> float:
    """Length of the line segment inside the closed square pixel.

    Computed by parametric clipping of the line against the four pixel
    faces, not via the ray-driven closed form.
    """
    if delta_x <= 0.0:
        raise ValueError(f"delta_x must be positive, got {delta_x!r}")
    c = math.cos(line.phi)
    s = math.sin(line.phi)
    ox = line.s * c
    oy = line.s * s
    h = 0.5 * delta_x
    cx, cy = float(pixel_center[0]), float(pixel_center[1])

    t_lo = -math.inf
    t_hi = math.inf
    for origin, d, lo, hi in ((ox, -s, cx - h, cx + h), (oy, c, cy - h, cy + h)):
        if d == 0.0:
            if not lo <= origin <= hi:
                return 0.0
        else:
            t0 = (lo - origin) / d
            t1 = (hi - origin) / d
            if t0 > t1:
                t0, t1 = t1, t0
            t_lo = max(t_lo, t0)
            t_hi = min(t_hi, t1)
    return max(0.0, t_hi - t_lo)


def intersection_lengths_grid(grid: ImageGrid, line: Line) -> np.ndarray:
    """Intersection lengths of one line with every pixel of a grid.

    Same clipping construction as ``intersection_length``, vectorized over
    pixel centers; returns an (n_x, n_x) array indexed like Image.values.
    """
    c = math.cos(line.phi)
    s = math.sin(line.phi)
    ox = line.s * c
    oy = line.s * s
    h = 0.5 * grid.delta_x
    xs = grid.centers()
    n = grid.n_x

    t_lo = np.full((n, n), -np.inf)
    t_hi = np.full((n, n), np.inf)
    alive = np.ones((n, n), dtype=bool)
    for origin, d, centers, axis in ((ox, -s, xs, 0), (oy, c, xs, 1)):
        lo = centers - h
        hi = centers + h
        if d == 0.0:
            inside = (lo <= origin) & (origin <= hi)
            alive &= inside[:, None] if axis == 0 else inside[None, :]
        else:
            t0 = (lo - origin) / d
            t1 = (hi - origin) / d
            if t0[0] > t1[0]:
                t0, t1 = t1, t0
            if axis == 0:
                t_lo = np.maximum(t_lo, t0[:, None])
                t_hi = np.minimum(t_hi, t1[:, None])
            else:
                t_lo = np.maximum(t_lo, t0[None, :])
                t_hi = np.minimum(t_hi, t1[None, :])
    out = np.where(alive, np.maximum(t_hi - t_lo, 0.0), 0.0)
    # lines parallel to an axis leave t unbounded on that axis
    return np.where(np.isfinite(out), out, 0.0)


@dataclass(frozen=True)
class RayDriven:
    """Ray-driven weight function for a given pixel spacing."""

    delta_x: float
    kind = "ray"

    def __post_init__(self):
        if self.delta_x <= 0.0:
            raise ValueError(f"delta_x must be positive, got {self.delta_x!r}")

    def support_radius(self, phi: float) -> float:
        return RayWeightParams.from_angle(phi, self.delta_x).s_bar

    def weight(self, phi: float, t: float) -> float:
        return ray_weight(phi, t, self.delta_x)


@dataclass(frozen=True)
class PixelDriven:
    """Pixel-driven (hat interpolation) weight function for a detector spacing."""

    delta_s: float
    kind = "pixel"

    def __post_init__(self):
        if self.delta_s <= 0.0:
            raise ValueError(f"delta_s must be positive, got {self.delta_s!r}")

    def support_radius(self, phi: float) -> float:
        return self.delta_s

    def weight(self, phi: float, t: float) -> float:
        return pixel_weight(t, self.delta_s)


WeightFunction = RayDriven | PixelDriven


def weight_support_radius(w: WeightFunction, phi: float) -> float:
    """Smallest r such that w(phi, t) = 0 whenever |t| > r."""
    return w.support_radius(phi)
