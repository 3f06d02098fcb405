"""Command-line entry points.

Exit codes: 0 success, 2 malformed input or bad usage, 3 unwritable output,
4 sparse entry cap exceeded, 5 adjoint check failed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import formats
from .experiments import ExperimentConfig, run_example1, run_example2, run_example3
from .grid import DetectorGrid, GeometrySpec, Image, ImageGrid, Sinogram, make_uniform_angles
from .operators import (DEFAULT_MAX_ENTRIES, ResourceLimitError, adjoint_gap,
                        assemble_sparse, backproject, forward)
from .weights import PixelDriven, RayDriven

ADJOINT_TOL = 1e-12

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_WRITE = 3
EXIT_CAP = 4
EXIT_ADJOINT = 5


def _fail(message: str, code: int) -> int:
    print(f"radonconv: error: {message}", file=sys.stderr)
    return code


def _add_geometry_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--nx", type=int, required=True, help="pixels per image axis")
    sub.add_argument("--ns", type=int, required=True, help="detector bins")
    sub.add_argument("--nphi", type=int, required=True, help="projection angles")
    sub.add_argument("--weight", choices=("ray", "pixel"), required=True,
                     help="weight function kind")
    sub.add_argument("--angle-offset", type=float, default=0.0,
                     help="uniform angle offset as a fraction of one cell")
    sub.add_argument("--workers", type=int, default=None,
                     help="compute threads (results do not depend on this)")


def _geometry(args) -> GeometrySpec:
    return GeometrySpec(ImageGrid(args.nx), DetectorGrid(args.ns),
                        make_uniform_angles(args.nphi, args.angle_offset))


def _weight(args, geom: GeometrySpec):
    if args.weight == "ray":
        return RayDriven(geom.delta_x)
    return PixelDriven(geom.delta_s)


def _read_input(path, expected_kind: int, expected_shape) -> np.ndarray | int:
    kind_names = {formats.KIND_IMAGE: "image", formats.KIND_SINOGRAM: "sinogram"}
    try:
        kind, values = formats.read_rdk(path)
    except (OSError, formats.RdkFormatError) as exc:
        return _fail(f"cannot read {path}: {exc}", EXIT_USAGE)
    if kind != expected_kind:
        return _fail(
            f"{path} holds a {kind_names[kind]}, expected a "
            f"{kind_names[expected_kind]}", EXIT_USAGE)
    if values.shape != expected_shape:
        return _fail(
            f"{path} has shape {values.shape}, flags require {expected_shape}",
            EXIT_USAGE)
    return values


def _cmd_forward(args) -> int:
    geom = _geometry(args)
    values = _read_input(args.input, formats.KIND_IMAGE, (args.nx, args.nx))
    if isinstance(values, int):
        return values
    sino = forward(geom, _weight(args, geom), Image(geom.image_grid, values),
                   workers=args.workers)
    try:
        formats.write_rdk(args.output, formats.KIND_SINOGRAM, sino.values)
    except OSError as exc:
        return _fail(f"cannot write {args.output}: {exc}", EXIT_WRITE)
    return EXIT_OK


def _cmd_backproject(args) -> int:
    geom = _geometry(args)
    values = _read_input(args.input, formats.KIND_SINOGRAM,
                         (args.nphi, args.ns))
    if isinstance(values, int):
        return values
    image = backproject(geom, _weight(args, geom),
                        Sinogram(geom.angle_set, geom.detector_grid, values),
                        workers=args.workers)
    try:
        formats.write_rdk(args.output, formats.KIND_IMAGE, image.values)
    except OSError as exc:
        return _fail(f"cannot write {args.output}: {exc}", EXIT_WRITE)
    return EXIT_OK


def _cmd_example(args) -> int:
    cfg = ExperimentConfig(example_id=args.example, n_x=args.nx, n_s=args.ns,
                           n_phi=args.nphi, weight_kind=args.weight,
                           angle_offset_fraction=args.angle_offset,
                           workers=args.workers)
    runner = {1: run_example1, 2: run_example2, 3: run_example3}[args.example]
    report = runner(cfg)
    try:
        os.makedirs(args.outdir, exist_ok=True)
        formats.write_report_csv(os.path.join(args.outdir, "report.csv"), report)
        formats.write_rdk(os.path.join(args.outdir, "error_field.rdk"),
                          formats.KIND_IMAGE, report.error_field.values)
        formats.write_pgm(os.path.join(args.outdir, "error_field.pgm"),
                          report.error_field.values)
    except OSError as exc:
        return _fail(f"cannot write into {args.outdir}: {exc}", EXIT_WRITE)
    print(f"example {args.example} ({args.weight}): rel_error "
          f"{formats.fmt17(report.rel_error)}")
    return EXIT_OK


def _cmd_matrix(args) -> int:
    geom = _geometry(args)
    op = assemble_sparse(geom, _weight(args, geom),
                         max_entries=args.max_entries, workers=args.workers)
    try:
        formats.write_matrix_market(args.output, op)
    except OSError as exc:
        return _fail(f"cannot write {args.output}: {exc}", EXIT_WRITE)
    return EXIT_OK


def _cmd_adjoint_check(args) -> int:
    if args.trials < 1:
        raise ValueError(f"--trials must be at least 1, got {args.trials}")
    geom = _geometry(args)
    w = _weight(args, geom)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        f = Image(geom.image_grid, rng.standard_normal((args.nx, args.nx)))
        g = Sinogram(geom.angle_set, geom.detector_grid,
                     rng.standard_normal((args.nphi, args.ns)))
        gap = adjoint_gap(geom, w, f, g, workers=args.workers)
        worst = max(worst, gap.value)
    print(f"max adjoint gap {formats.fmt17(worst)} over {args.trials} trials")
    return EXIT_OK if worst <= ADJOINT_TOL else EXIT_ADJOINT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radonconv",
        description="Convolutional ray-driven and pixel-driven Radon transforms")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("forward", help="project an image to a sinogram")
    _add_geometry_flags(sub)
    sub.add_argument("--in", dest="input", required=True, help="input image (.rdk)")
    sub.add_argument("--out", dest="output", required=True, help="output sinogram (.rdk)")
    sub.set_defaults(func=_cmd_forward)

    sub = subs.add_parser("backproject", help="backproject a sinogram to an image")
    _add_geometry_flags(sub)
    sub.add_argument("--in", dest="input", required=True, help="input sinogram (.rdk)")
    sub.add_argument("--out", dest="output", required=True, help="output image (.rdk)")
    sub.set_defaults(func=_cmd_backproject)

    sub = subs.add_parser("example", help="run one of the reference studies")
    sub.add_argument("--example", type=int, choices=(1, 2, 3), required=True)
    _add_geometry_flags(sub)
    sub.add_argument("--outdir", required=True,
                     help="directory for report.csv and error field files")
    sub.set_defaults(func=_cmd_example)

    sub = subs.add_parser("matrix", help="export the weight matrix (Matrix Market)")
    _add_geometry_flags(sub)
    sub.add_argument("--out", dest="output", required=True, help="output .mtx path")
    sub.add_argument("--max-entries", type=int, default=DEFAULT_MAX_ENTRIES,
                     help="entry cap guarding memory use")
    sub.set_defaults(func=_cmd_matrix)

    sub = subs.add_parser("adjoint-check",
                          help="verify the forward/backprojection adjoint identity")
    _add_geometry_flags(sub)
    sub.add_argument("--trials", type=int, required=True,
                     help="number of random image/sinogram pairs")
    sub.add_argument("--seed", type=int, default=0, help="random seed")
    sub.set_defaults(func=_cmd_adjoint_check)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        return _fail(str(exc), EXIT_CAP)
    except (formats.RdkFormatError, ValueError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except OSError as exc:
        return _fail(str(exc), EXIT_WRITE)


if __name__ == "__main__":
    sys.exit(main())
