"""Backprojection and forward-projection error studies.

Each study backprojects (or projects) a phantom with a known closed form,
then reports the relative L2 error over pixel centers inside the mask disk
B(0, mask_radius).  The three numbered examples probe the angular sum rule
of a weight function in increasingly hostile ways: an all-angle constant, a
single angular cell, and a sinogram linear in the detector coordinate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from . import analytic
from .grid import (AngleSet, DetectorGrid, GeometrySpec, Image, ImageGrid,
                   make_uniform_angles)
from .operators import backproject, forward
from .weights import PixelDriven, RayDriven, WeightFunction

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "MaskedError",
    "ConvergenceRow",
    "masked_rel_error",
    "run_example1",
    "run_example2",
    "run_example3",
    "run_forward_convergence",
    "run_backproj_convergence",
]

WEIGHT_KINDS = ("ray", "pixel")
REGIMES = ("balanced", "shrinking_ds", "shrinking_dx")


@dataclass(frozen=True)
class ExperimentConfig:
    example_id: int | str
    n_x: int
    n_s: int
    n_phi: int
    weight_kind: str = "ray"
    angle_offset_fraction: float = 0.0
    mask_radius: float = 0.9
    workers: int | None = None

    def __post_init__(self):
        if self.weight_kind not in WEIGHT_KINDS:
            raise ValueError(f"weight_kind must be one of {WEIGHT_KINDS}")
        if not 0.0 < self.mask_radius < 1.0:
            raise ValueError(
                f"mask_radius must lie in (0, 1), got {self.mask_radius!r}")

    def geometry(self) -> GeometrySpec:
        return GeometrySpec(
            ImageGrid(self.n_x),
            DetectorGrid(self.n_s),
            make_uniform_angles(self.n_phi, self.angle_offset_fraction))

    def weight(self, geom: GeometrySpec) -> WeightFunction:
        if self.weight_kind == "ray":
            return RayDriven(geom.delta_x)
        return PixelDriven(geom.delta_s)


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one experiment run.

    error_field holds the signed pointwise error (reference minus computed)
    at pixel centers, zeroed outside the mask.  rel_error is the masked
    relative L2 error, or the absolute error when the reference vanishes on
    the mask (flagged by error_is_absolute).
    """

    config: ExperimentConfig
    rel_error: float
    error_is_absolute: bool
    error_field: Image
    runtime_seconds: float
    extras: dict[str, float] = field(default_factory=dict)


class MaskedError(NamedTuple):
    value: float
    relative: bool


def _mask(grid: ImageGrid, mask_radius: float) -> np.ndarray:
    xs = grid.centers()
    return xs[:, None] ** 2 + xs[None, :] ** 2 <= mask_radius * mask_radius


def masked_rel_error(computed: Image,
                     exact: Callable[[np.ndarray, np.ndarray], np.ndarray],
                     mask_radius: float) -> MaskedError:
    """Relative L2 error over pixel centers inside B(0, mask_radius).

    ``exact`` is evaluated on broadcastable center-coordinate arrays.  Pixel
    membership is decided by the center.  A vanishing reference on the mask
    makes the error absolute (relative=False).
    """
    if not 0.0 < mask_radius < 1.0:
        raise ValueError(f"mask_radius must lie in (0, 1), got {mask_radius!r}")
    grid = computed.grid
    xs = grid.centers()
    ref = np.asarray(exact(xs[:, None], xs[None, :]), dtype=np.float64)
    ref = np.broadcast_to(ref, computed.values.shape)
    inside = _mask(grid, mask_radius)
    diff = computed.values[inside] - ref[inside]
    num = float(np.sqrt(np.sum(diff * diff)))
    den = float(np.sqrt(np.sum(ref[inside] ** 2)))
    if den == 0.0:
        return MaskedError(num, False)
    return MaskedError(num / den, True)


def _backprojection_study(cfg: ExperimentConfig, phantom,
                          extras: dict[str, float] | None = None
                          ) -> ExperimentReport:
    geom = cfg.geometry()
    w = cfg.weight(geom)
    g = analytic.render_sinogram(phantom, geom.angle_set, geom.detector_grid)
    t0 = time.perf_counter()
    b = backproject(geom, w, g, workers=cfg.workers)
    runtime = time.perf_counter() - t0

    xs = geom.image_grid.centers()
    ref = analytic.backprojection_field(phantom, xs[:, None], xs[None, :])
    inside = _mask(geom.image_grid, cfg.mask_radius)
    err = masked_rel_error(b, lambda X, Y: analytic.backprojection_field(
        phantom, X, Y), cfg.mask_radius)
    field_values = np.where(inside, ref - b.values, 0.0)
    return ExperimentReport(
        config=cfg,
        rel_error=err.value,
        error_is_absolute=not err.relative,
        error_field=Image(geom.image_grid, field_values),
        runtime_seconds=runtime,
        extras=dict(extras or {}),
    )


def run_example1(cfg: ExperimentConfig) -> ExperimentReport:
    """Backproject the constant sinogram g = 1; reference field is pi."""
    return _backprojection_study(replace(cfg, example_id=1),
                                 analytic.UniformSinogram(1.0))


def find_quarter_turn_index(angle_set: AngleSet) -> int:
    """Index q with phi_q = pi/4, the angle used by the single-cell study."""
    hits = np.nonzero(np.abs(angle_set.angles - np.pi / 4) <= 1e-12)[0]
    if hits.size == 0:
        raise ValueError("angle set does not contain pi/4")
    return int(hits[0])


def run_example2(cfg: ExperimentConfig, q_hat: int | None = None
                 ) -> ExperimentReport:
    """Backproject a single-angular-cell sinogram; reference field is 1.

    By default the cell at phi = pi/4 is used.  An explicit q_hat must be a
    valid angular index.
    """
    cfg = replace(cfg, example_id=2)
    geom = cfg.geometry()
    if q_hat is None:
        q_hat = find_quarter_turn_index(geom.angle_set)
    elif not 0 <= q_hat < geom.n_phi:
        raise ValueError(f"q_hat={q_hat} out of range for n_phi={geom.n_phi}")
    return _backprojection_study(cfg, analytic.SingleAngleSinogram(q_hat))


def run_example3(cfg: ExperimentConfig) -> ExperimentReport:
    """Backproject the linear sinogram g = s; reference field is 2y.

    For the pixel-driven weight the report extras carry the two Riemann
    sums and the maximum deviation between the measured error field and the
    Riemann-sum prediction over the mask.
    """
    cfg = replace(cfg, example_id=3)
    report = _backprojection_study(cfg, analytic.LinearSinogram())
    if cfg.weight_kind != "pixel":
        return report
    geom = report.error_field.grid
    angle_set = cfg.geometry().angle_set
    cs = analytic.riemann_cos_sum(angle_set)
    ss = analytic.riemann_sin_sum(angle_set)
    xs = geom.centers()
    predicted = -xs[:, None] * cs + xs[None, :] * (2.0 - ss)
    inside = _mask(geom, cfg.mask_radius)
    deviation = float(np.max(np.abs(
        np.where(inside, report.error_field.values - predicted, 0.0))))
    extras = {"cos_sum": cs, "sin_sum": ss,
              "max_prediction_deviation": deviation}
    return replace(report, extras=extras)


class ConvergenceRow(NamedTuple):
    n_x: int
    n_s: int
    n_phi: int
    rel_error: float


def _validate_sizes(sizes, regime: str | None, fixed_angles_ok: bool = False):
    sizes = [tuple(int(v) for v in size) for size in sizes]
    if not sizes:
        raise ValueError("size list must not be empty")
    for size in sizes:
        if len(size) != 3 or min(size) < 1:
            raise ValueError(f"sizes must be (n_x, n_s, n_phi) triples, got {size!r}")
    for prev, cur in zip(sizes, sizes[1:]):
        grid_ok = cur[0] > prev[0] and cur[1] > prev[1]
        angle_ok = cur[2] >= prev[2] if fixed_angles_ok else cur[2] > prev[2]
        if not (grid_ok and angle_ok):
            raise ValueError("sizes must be strictly increasing in all components")
    if regime == "balanced" and any(nx != ns for nx, ns, _ in sizes):
        raise ValueError("balanced regime requires n_s = n_x")
    if regime == "shrinking_ds" and any(ns <= nx for nx, ns, _ in sizes):
        raise ValueError("shrinking_ds regime requires n_s > n_x")
    if regime == "shrinking_dx" and any(nx <= ns for nx, ns, _ in sizes):
        raise ValueError("shrinking_dx regime requires n_x > n_s")
    return sizes


def run_forward_convergence(phantom: analytic.Disk, sizes,
                            workers: int | None = None
                            ) -> list[ConvergenceRow]:
    """Ray-driven forward error against the disk chord sinogram per size.

    The error is the relative sinogram-space L2 norm (cells weighted by
    |Phi_q| delta_s) of the difference to the chord lengths at cell centers.
    The n_s / n_x ratio must stay bounded for the trend to be meaningful;
    sizes must be strictly increasing triples.
    """
    sizes = _validate_sizes(sizes, None)
    if max(ns / nx for nx, ns, _ in sizes) > 16.0:
        raise ValueError("forward convergence requires a bounded n_s / n_x ratio")
    rows = []
    for n_x, n_s, n_phi in sizes:
        geom = GeometrySpec(ImageGrid(n_x), DetectorGrid(n_s),
                            make_uniform_angles(n_phi))
        f = analytic.render_image(phantom, geom.image_grid)
        g = forward(geom, RayDriven(geom.delta_x), f, workers=workers)
        sp = geom.detector_grid.centers()
        ref = np.stack([analytic.disk_sinogram(phantom.center, phantom.radius,
                                               phi, sp)
                        for phi in geom.angle_set.angles])
        wq = geom.angle_set.cell_widths[:, None]
        num = np.sqrt(np.sum((g.values - ref) ** 2 * wq) * geom.delta_s)
        den = np.sqrt(np.sum(ref ** 2 * wq) * geom.delta_s)
        rows.append(ConvergenceRow(n_x, n_s, n_phi, float(num / den)))
    return rows


def run_backproj_convergence(weight_kind: str, regime: str, sizes,
                             sinogram_example: int = 1,
                             workers: int | None = None
                             ) -> list[ConvergenceRow]:
    """Backprojection error per size for a declared resolution regime.

    Test sinograms are the constant (example 1) or single-cell (example 2)
    phantoms; the reported error is the masked relative L2 error of the
    backprojection against the exact constant field.  The image and detector
    grids must refine strictly; the angle count may stay fixed, since the
    resolution regimes concern delta_s against delta_x.
    """
    if weight_kind not in WEIGHT_KINDS:
        raise ValueError(f"weight_kind must be one of {WEIGHT_KINDS}")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if sinogram_example not in (1, 2):
        raise ValueError("sinogram_example must be 1 or 2")
    sizes = _validate_sizes(sizes, regime, fixed_angles_ok=True)
    rows = []
    for n_x, n_s, n_phi in sizes:
        cfg = ExperimentConfig(example_id=sinogram_example, n_x=n_x, n_s=n_s,
                               n_phi=n_phi, weight_kind=weight_kind,
                               workers=workers)
        if sinogram_example == 1:
            report = run_example1(cfg)
        else:
            report = run_example2(cfg)
        rows.append(ConvergenceRow(n_x, n_s, n_phi, report.rel_error))
    return rows
