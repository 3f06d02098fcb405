"""Convolutional discretizations of the 2-D Radon transform.

Ray-driven and pixel-driven projection weights expressed as a shared
convolutional form, matched forward/backprojection operator pairs, a sparse
matrix view, analytic references, and the error studies built on them.
"""

from .grid import (AngleSet, DetectorGrid, GeometrySpec, Image, ImageGrid,
                   Sinogram, detector_center, direction, make_uniform_angles,
                   pixel_center)
from .weights import (Line, PixelDriven, RayDriven, RayWeightParams,
                      WeightFunction, intersection_length, pixel_weight,
                      ray_weight, weight_support_radius)
from .operators import (AdjointGap, ResourceLimitError, SparseOperator,
                        adjoint_gap, assemble_sparse, backproject, forward)
from .analytic import (Disk, LinearSinogram, SingleAngleSinogram,
                       UniformSinogram, disk_sinogram, exact_backprojection,
                       predicted_example3_error_field, riemann_cos_sum,
                       riemann_sin_sum)
from .experiments import (ExperimentConfig, ExperimentReport, masked_rel_error,
                          run_backproj_convergence, run_example1, run_example2,
                          run_example3, run_forward_convergence)

__version__ = "0.1.0"
