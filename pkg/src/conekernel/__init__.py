"""Heat kernels of ``-Delta + V_0(y)/r^2`` on metric cones ``C(Y)``.

The kernel is summed as a certified Bessel series over the spectrum of the
cross-section operator, and checked against independent oracles: Weber's
integral, the Euclidean Gaussian, a Hankel transform, and a finite-volume
solver on two-dimensional cones.

Quick start::

    from conekernel import ConePoint, HeatKernelEvaluator, SphereSection
    ev = HeatKernelEvaluator(SphereSection(n=3, a=0.0))
    y, y2 = ev.section.points_at_distance(0.5)
    ev.evaluate(1.0, ConePoint(1.0, y), ConePoint(2.0, y2))
"""

from ._backend import NAME as BACKEND
from .cone_geometry import ConePoint, cone_distance, cone_distance_dh, default_radial_cut, integrate_over_cone
from .cross_section import (
    CircleSection,
    CrossSection,
    MatrixSection,
    SpectralMode,
    SphereSection,
    build_matrix_section,
    circle_matrix_section,
    read_spectral_file,
    write_spectral_file,
)
from .errors import (
    BadWeights,
    BesselOverflow,
    ConeKernelError,
    GridTooCoarse,
    IndexOutOfRange,
    InvalidPoint,
    NonConvergence,
    NonPositiveSpectrum,
    NotSymmetric,
    SpectralFileError,
    TailTooLarge,
    TruncationFailure,
)
from .heat_kernel import BoundReport, HeatKernelEvaluator, KernelEvaluation, LemmaReport
from .oracles import (
    FDSolution,
    RadialGrid,
    fd_heat_evolve,
    fd_versus_series,
    hankel_transform,
    weber_closed_form,
    weber_quadrature,
)
from .special_functions import (
    BesselValue,
    bessel_i,
    bessel_i_rough_bound,
    bessel_i_scaled,
    bessel_j,
    log_bessel_i,
    log_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BadWeights",
    "BesselOverflow",
    "BesselValue",
    "BoundReport",
    "CircleSection",
    "ConeKernelError",
    "ConePoint",
    "CrossSection",
    "FDSolution",
    "GridTooCoarse",
    "HeatKernelEvaluator",
    "IndexOutOfRange",
    "InvalidPoint",
    "KernelEvaluation",
    "LemmaReport",
    "MatrixSection",
    "NonConvergence",
    "NonPositiveSpectrum",
    "NotSymmetric",
    "RadialGrid",
    "SpectralFileError",
    "SpectralMode",
    "SphereSection",
    "TailTooLarge",
    "TruncationFailure",
    "bessel_i",
    "bessel_i_rough_bound",
    "bessel_i_scaled",
    "bessel_j",
    "build_matrix_section",
    "circle_matrix_section",
    "cone_distance",
    "cone_distance_dh",
    "default_radial_cut",
    "fd_heat_evolve",
    "fd_versus_series",
    "hankel_transform",
    "integrate_over_cone",
    "log_bessel_i",
    "log_gamma",
    "read_spectral_file",
    "weber_closed_form",
    "weber_quadrature",
    "write_spectral_file",
]
