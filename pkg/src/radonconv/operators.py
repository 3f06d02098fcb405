"""Convolutional forward projector, backprojector and sparse matrix assembly.

Both operators evaluate the same kind of sum: a weight function applied at
``x_ij . theta_q - s_p`` times the integral of the input over the matching
cell.  Evaluation is gather form throughout.  The forward projector owns one
sinogram cell per (angle, detector) pair and sums its contributing pixels in
ascending (i, j) order; the backprojector owns one pixel and sums its
contributing sinogram cells in ascending (q, p) order.  No output cell is
ever written by two workers and every per-cell summation order is fixed, so
results are bitwise independent of the number of threads.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import numba
from numba import get_num_threads, njit, prange, set_num_threads

from .grid import GeometrySpec, Image, Sinogram
from .weights import PixelDriven, RayDriven, WeightFunction, ray_param_arrays

__all__ = [
    "SparseOperator",
    "ResourceLimitError",
    "AdjointGap",
    "forward",
    "backproject",
    "assemble_sparse",
    "adjoint_gap",
]

# skip the tbb probe (broken on some installs) and use the openmp layer,
# which supports set_num_threads
numba.config.THREADING_LAYER = "omp"

# slack, in index units, added to enumeration bounds so that rounding in the
# bound divisions can never exclude a cell the weight formula assigns a
# nonzero value (extra cells evaluate to weight zero and are harmless)
_PAD = 1e-3

_TINY = float(np.finfo(np.float64).tiny)

DEFAULT_MAX_ENTRIES = 20_000_000


class ResourceLimitError(RuntimeError):
    """Sparse assembly would exceed the configured entry cap."""


class AdjointGap(NamedTuple):
    """Adjoint mismatch; ``relative`` is False when a zero norm forced an absolute gap."""

    value: float
    relative: bool


@contextmanager
def _thread_count(workers):
    if workers is None:
        yield
        return
    if not isinstance(workers, (int, np.integer)) or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")
    previous = get_num_threads()
    set_num_threads(int(workers))
    try:
        yield
    finally:
        set_num_threads(previous)


@njit(inline="always", cache=True)
def _weight_at(kind_ray, at, q, s_bar, s_und, plateau, inv_den, axis_like,
               delta_s, inv_ds2):
    if kind_ray:
        if at < s_und[q]:
            return plateau[q]
        if not axis_like[q]:
            if at < s_bar[q]:
                return (s_bar[q] - at) * inv_den[q]
            return 0.0
        if at == s_bar[q]:
            return 0.5 * plateau[q]
        return 0.0
    d = delta_s - at
    if d > 0.0:
        return d * inv_ds2
    return 0.0


@njit(inline="always", cache=True)
def _index_range(lo_f, hi_f, n):
    """Closed index interval [ceil(lo_f), floor(hi_f)] clamped to [0, n)."""
    if not lo_f <= hi_f:
        return 0, -1
    if lo_f < 0.0:
        lo_f = 0.0
    if hi_f > n - 1.0:
        hi_f = n - 1.0
    if lo_f > hi_f:
        return 0, -1
    return int(math.ceil(lo_f)), int(math.floor(hi_f))


@njit(parallel=True, cache=True)
def _forward_kernel(xs, cosv, sinv, sup, s_bar, s_und, plateau, inv_den,
                    axis_like, kind_ray, fscaled, delta_x, delta_s, inv_ds2,
                    out):
    n_x = xs.shape[0]
    n_phi = cosv.shape[0]
    n_s = out.shape[1]
    inv_dx = 1.0 / delta_x
    for q in prange(n_phi):
        c = cosv[q]
        s = sinv[q]
        r = sup[q]
        for p in range(n_s):
            sp = (p + 0.5) * delta_s - 1.0
            acc = 0.0
            # candidate columns: |x_i c - sp| <= r + s covers |y_j s| <= s
            if c == 0.0:
                ilo, ihi = 0, n_x - 1
            else:
                b0 = (sp - r - s) / c
                b1 = (sp + r + s) / c
                if b0 > b1:
                    b0, b1 = b1, b0
                ilo, ihi = _index_range((b0 + 1.0) * inv_dx - 0.5 - _PAD,
                                        (b1 + 1.0) * inv_dx - 0.5 + _PAD, n_x)
            for i in range(ilo, ihi + 1):
                a = xs[i] * c
                if s == 0.0:
                    if abs(a - sp) > r:
                        continue
                    jlo, jhi = 0, n_x - 1
                else:
                    # sin is nonnegative on [0, pi), so the bounds are ordered
                    jlo, jhi = _index_range(
                        ((sp - r - a) / s + 1.0) * inv_dx - 0.5 - _PAD,
                        ((sp + r - a) / s + 1.0) * inv_dx - 0.5 + _PAD, n_x)
                for j in range(jlo, jhi + 1):
                    t = a + xs[j] * s - sp
                    w = _weight_at(kind_ray, abs(t), q, s_bar, s_und, plateau,
                                   inv_den, axis_like, delta_s, inv_ds2)
                    acc += w * fscaled[i, j]
            out[q, p] = acc


@njit(parallel=True, cache=True)
def _backproject_kernel(xs, cosv, sinv, sup, s_bar, s_und, plateau, inv_den,
                        axis_like, kind_ray, used_q, gscaled, delta_s,
                        inv_ds2, out):
    n_x = xs.shape[0]
    n_used = used_q.shape[0]
    n_s = gscaled.shape[1]
    inv_ds = 1.0 / delta_s
    for i in prange(n_x):
        xc = xs[i]
        for qi in range(n_used):
            q = used_q[qi]
            c = cosv[q]
            s = sinv[q]
            r = sup[q]
            a = xc * c
            for j in range(n_x):
                xi = a + xs[j] * s
                plo, phi_ = _index_range((xi - r + 1.0) * inv_ds - 0.5 - _PAD,
                                         (xi + r + 1.0) * inv_ds - 0.5 + _PAD,
                                         n_s)
                acc = out[i, j]
                for p in range(plo, phi_ + 1):
                    t = xi - ((p + 0.5) * delta_s - 1.0)
                    w = _weight_at(kind_ray, abs(t), q, s_bar, s_und, plateau,
                                   inv_den, axis_like, delta_s, inv_ds2)
                    acc += w * gscaled[q, p]
                out[i, j] = acc


@njit(parallel=True, cache=True)
def _count_kernel(xs, cosv, sinv, sup, s_bar, s_und, plateau, inv_den,
                  axis_like, kind_ray, delta_x, delta_s, inv_ds2, n_s, counts):
    # same traversal as _forward_kernel, counting strictly positive weights
    n_x = xs.shape[0]
    n_phi = cosv.shape[0]
    inv_dx = 1.0 / delta_x
    for q in prange(n_phi):
        c = cosv[q]
        s = sinv[q]
        r = sup[q]
        for p in range(n_s):
            sp = (p + 0.5) * delta_s - 1.0
            n = 0
            if c == 0.0:
                ilo, ihi = 0, n_x - 1
            else:
                b0 = (sp - r - s) / c
                b1 = (sp + r + s) / c
                if b0 > b1:
                    b0, b1 = b1, b0
                ilo, ihi = _index_range((b0 + 1.0) * inv_dx - 0.5 - _PAD,
                                        (b1 + 1.0) * inv_dx - 0.5 + _PAD, n_x)
            for i in range(ilo, ihi + 1):
                a = xs[i] * c
                if s == 0.0:
                    if abs(a - sp) > r:
                        continue
                    jlo, jhi = 0, n_x - 1
                else:
                    jlo, jhi = _index_range(
                        ((sp - r - a) / s + 1.0) * inv_dx - 0.5 - _PAD,
                        ((sp + r - a) / s + 1.0) * inv_dx - 0.5 + _PAD, n_x)
                for j in range(jlo, jhi + 1):
                    t = a + xs[j] * s - sp
                    w = _weight_at(kind_ray, abs(t), q, s_bar, s_und, plateau,
                                   inv_den, axis_like, delta_s, inv_ds2)
                    if w > 0.0:
                        n += 1
            counts[q * n_s + p] = n


@njit(parallel=True, cache=True)
def _fill_kernel(xs, cosv, sinv, sup, s_bar, s_und, plateau, inv_den,
                 axis_like, kind_ray, delta_x, delta_s, inv_ds2, n_s, row_ptr,
                 cols, weights):
    n_x = xs.shape[0]
    n_phi = cosv.shape[0]
    inv_dx = 1.0 / delta_x
    for q in prange(n_phi):
        c = cosv[q]
        s = sinv[q]
        r = sup[q]
        for p in range(n_s):
            sp = (p + 0.5) * delta_s - 1.0
            k = row_ptr[q * n_s + p]
            if c == 0.0:
                ilo, ihi = 0, n_x - 1
            else:
                b0 = (sp - r - s) / c
                b1 = (sp + r + s) / c
                if b0 > b1:
                    b0, b1 = b1, b0
                ilo, ihi = _index_range((b0 + 1.0) * inv_dx - 0.5 - _PAD,
                                        (b1 + 1.0) * inv_dx - 0.5 + _PAD, n_x)
            for i in range(ilo, ihi + 1):
                a = xs[i] * c
                if s == 0.0:
                    if abs(a - sp) > r:
                        continue
                    jlo, jhi = 0, n_x - 1
                else:
                    jlo, jhi = _index_range(
                        ((sp - r - a) / s + 1.0) * inv_dx - 0.5 - _PAD,
                        ((sp + r - a) / s + 1.0) * inv_dx - 0.5 + _PAD, n_x)
                for j in range(jlo, jhi + 1):
                    t = a + xs[j] * s - sp
                    w = _weight_at(kind_ray, abs(t), q, s_bar, s_und, plateau,
                                   inv_den, axis_like, delta_s, inv_ds2)
                    if w > 0.0:
                        cols[k] = i * n_x + j
                        weights[k] = w
                        k += 1


@njit(parallel=True, cache=True)
def _csr_matvec(row_ptr, cols, weights, v, out):
    n_rows = row_ptr.shape[0] - 1
    for r in prange(n_rows):
        acc = 0.0
        for k in range(row_ptr[r], row_ptr[r + 1]):
            acc += weights[k] * v[cols[k]]
        out[r] = acc


@njit(cache=True)
def _csr_rmatvec(row_ptr, cols, weights, g, out):
    # sequential over rows: each pixel accumulates in ascending (q, p) order,
    # matching the backprojection kernel bitwise
    n_rows = row_ptr.shape[0] - 1
    for r in range(n_rows):
        gv = g[r]
        if gv == 0.0:
            continue
        for k in range(row_ptr[r], row_ptr[r + 1]):
            out[cols[k]] += weights[k] * gv


def _angle_tables(geom: GeometrySpec, w: WeightFunction):
    """Per-angle trig and weight parameter arrays shared by all kernels."""
    angles = geom.angle_set.angles
    cosv = np.cos(angles)
    sinv = np.sin(angles)
    if isinstance(w, RayDriven):
        if w.delta_x != geom.delta_x:
            raise ValueError("ray-driven weight delta_x does not match geometry")
        s_bar, s_und, plateau, inv_den, axis_like = ray_param_arrays(
            angles, geom.delta_x)
        sup = s_bar
        kind_ray = True
    elif isinstance(w, PixelDriven):
        if w.delta_s != geom.delta_s:
            raise ValueError("pixel-driven weight delta_s does not match geometry")
        n = angles.size
        sup = np.full(n, geom.delta_s)
        s_bar = np.zeros(n)
        s_und = np.zeros(n)
        plateau = np.zeros(n)
        inv_den = np.zeros(n)
        axis_like = np.zeros(n, dtype=np.bool_)
        kind_ray = False
    else:
        raise TypeError(f"unsupported weight function {w!r}")
    return cosv, sinv, sup, s_bar, s_und, plateau, inv_den, axis_like, kind_ray


def _check_image(geom: GeometrySpec, f: Image):
    if f.grid != geom.image_grid:
        raise ValueError("image grid does not match geometry")


def _check_sinogram(geom: GeometrySpec, g: Sinogram):
    if (g.detector_grid != geom.detector_grid
            or not np.array_equal(g.angle_set.angles, geom.angle_set.angles)
            or not np.array_equal(g.angle_set.cell_widths,
                                  geom.angle_set.cell_widths)):
        raise ValueError("sinogram grids do not match geometry")


def _scaled_sinogram(geom: GeometrySpec, g: Sinogram) -> np.ndarray:
    """Cell integrals of a cellwise constant sinogram: g_qp |Phi_q| delta_s."""
    return g.values * geom.angle_set.cell_widths[:, None] * geom.delta_s


def forward(geom: GeometrySpec, w: WeightFunction, f: Image,
            workers: int | None = None) -> Sinogram:
    """Apply the convolutional forward projector.

    Output cell (q, p) receives sum_ij w(phi_q, x_ij . theta_q - s_p) * f_ij
    * delta_x^2, the weight paired with the integral of f over pixel (i, j).
    """
    _check_image(geom, f)
    tables = _angle_tables(geom, w)
    xs = geom.image_grid.centers()
    fscaled = f.values * (geom.delta_x * geom.delta_x)
    out = np.zeros((geom.n_phi, geom.n_s))
    with _thread_count(workers):
        _forward_kernel(xs, *tables, fscaled, geom.delta_x, geom.delta_s,
                        1.0 / (geom.delta_s * geom.delta_s), out)
    return Sinogram(geom.angle_set, geom.detector_grid, out)


def backproject(geom: GeometrySpec, w: WeightFunction, g: Sinogram,
                workers: int | None = None) -> Image:
    """Apply the convolutional backprojector.

    Output pixel (i, j) receives sum_qp w(phi_q, x_ij . theta_q - s_p) * g_qp
    * |Phi_q| * delta_s.  Sinogram rows that are identically zero are skipped;
    their contributions would be exact zero adds.
    """
    _check_sinogram(geom, g)
    tables = _angle_tables(geom, w)
    xs = geom.image_grid.centers()
    gscaled = _scaled_sinogram(geom, g)
    used_q = np.nonzero(np.any(gscaled, axis=1))[0]
    out = np.zeros((geom.n_x, geom.n_x))
    with _thread_count(workers):
        _backproject_kernel(xs, *tables, used_q, gscaled, geom.delta_s,
                            1.0 / (geom.delta_s * geom.delta_s), out)
    return Image(geom.image_grid, out)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Materialized weight matrix in row-compressed coordinate form.

    Row q * n_s + p holds the strictly positive weights
    w(phi_q, x_ij . theta_q - s_p), with column index i * n_x + j, in the
    same ascending (i, j) order the forward projector sums them.  apply()
    therefore reproduces forward() bitwise.
    """

    geom: GeometrySpec
    weight_function: WeightFunction
    row_ptr: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.geom.n_phi * self.geom.n_s

    @property
    def n_cols(self) -> int:
        return self.geom.n_x * self.geom.n_x

    @property
    def nnz(self) -> int:
        return int(self.weights.size)

    def coordinates(self):
        """Entry arrays (q, p, i, j, weight), one element per stored entry."""
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))
        q, p = np.divmod(rows, self.geom.n_s)
        i, j = np.divmod(self.cols, self.geom.n_x)
        return q, p, i, j, self.weights

    def apply(self, f: Image, workers: int | None = None) -> Sinogram:
        """Matrix-vector product; bitwise equal to forward() on the same geometry."""
        _check_image(self.geom, f)
        v = (f.values * (self.geom.delta_x * self.geom.delta_x)).ravel()
        out = np.zeros(self.n_rows)
        with _thread_count(workers):
            _csr_matvec(self.row_ptr, self.cols, self.weights, v, out)
        return Sinogram(self.geom.angle_set, self.geom.detector_grid,
                        out.reshape(self.geom.n_phi, self.geom.n_s))

    def apply_transpose(self, g: Sinogram) -> Image:
        """Transpose product against cell integrals; reproduces backproject()."""
        _check_sinogram(self.geom, g)
        gs = _scaled_sinogram(self.geom, g).ravel()
        out = np.zeros(self.n_cols)
        _csr_rmatvec(self.row_ptr, self.cols, self.weights, gs, out)
        return Image(self.geom.image_grid,
                     out.reshape(self.geom.n_x, self.geom.n_x))


def assemble_sparse(geom: GeometrySpec, w: WeightFunction,
                    max_entries: int = DEFAULT_MAX_ENTRIES,
                    workers: int | None = None) -> SparseOperator:
    """Materialize the weight matrix; raises ResourceLimitError over the cap."""
    tables = _angle_tables(geom, w)
    sup = tables[2]
    # each pixel meets at most 2 r / delta_s + 3 detector bins per angle
    estimate = int(np.sum(np.floor(2.0 * sup / geom.delta_s) + 3.0)
                   * geom.n_x * geom.n_x)
    if estimate > max_entries:
        raise ResourceLimitError(
            f"estimated {estimate} entries exceed cap {max_entries}")
    xs = geom.image_grid.centers()
    n_rows = geom.n_phi * geom.n_s
    counts = np.zeros(n_rows, dtype=np.int64)
    args = (xs, *tables, geom.delta_x, geom.delta_s,
            1.0 / (geom.delta_s * geom.delta_s), geom.n_s)
    with _thread_count(workers):
        _count_kernel(*args, counts)
        nnz = int(counts.sum())
        if nnz > max_entries:
            raise ResourceLimitError(f"{nnz} entries exceed cap {max_entries}")
        row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(counts, out=row_ptr[1:])
        cols = np.empty(nnz, dtype=np.int64)
        weights = np.empty(nnz)
        _fill_kernel(*args, row_ptr, cols, weights)
    return SparseOperator(geom, w, row_ptr, cols, weights)


def _u_inner(a: np.ndarray, b: np.ndarray, delta_x: float) -> float:
    return float(np.sum(a * b) * (delta_x * delta_x))


def _v_inner(a: np.ndarray, b: np.ndarray, widths: np.ndarray,
             delta_s: float) -> float:
    return float(np.sum(a * b * widths[:, None]) * delta_s)


def adjoint_gap(geom: GeometrySpec, w: WeightFunction, f: Image, g: Sinogram,
                workers: int | None = None) -> AdjointGap:
    """Normalized defect of <forward f, g>_V = <f, backproject g>_U.

    The two sides are the same double sum in different association, so the
    gap is algebraically zero and numerically at rounding level.  When
    ||f|| * ||g|| is zero the absolute gap is returned with relative=False.
    """
    _check_image(geom, f)
    _check_sinogram(geom, g)
    widths = geom.angle_set.cell_widths
    lhs = _v_inner(forward(geom, w, f, workers=workers).values, g.values,
                   widths, geom.delta_s)
    rhs = _u_inner(f.values, backproject(geom, w, g, workers=workers).values,
                   geom.delta_x)
    den = math.sqrt(_u_inner(f.values, f.values, geom.delta_x)) * math.sqrt(
        _v_inner(g.values, g.values, widths, geom.delta_s))
    if den == 0.0:
        return AdjointGap(abs(lhs - rhs), False)
    return AdjointGap(abs(lhs - rhs) / (den + _TINY), True)
