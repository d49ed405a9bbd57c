"""Sampling sets, oscillation estimates, and frames on R^n, the affine
group, and the first Heisenberg group."""

from .groups import (
    GroupModel,
    EuclideanModel,
    AffineModel,
    HeisenbergModel,
    model_from_id,
)
from .grids import Grid, GridFunction, interpolate
from .pointsets import (
    PointSet,
    Certificate,
    Partition,
    greedy_separated_dense,
    verify_separated,
    verify_dense,
    build_partition,
    quasilattice_semidirect,
    tiling_check,
    dilate_set,
)
from .analysis import (
    convolve,
    oscillation,
    osc_conv_check,
    vector_field_apply,
    apply_multiindex,
    sublaplacian_matrix,
    sublaplacian_spectrum,
    SpectralProjector,
    random_bandlimited,
    estimate_constants,
    ConstantEstimates,
    oscillation_scaling_check,
    ball_volume,
)

__version__ = "0.1.0"

from .kernels import (
    SincKernel,
    SpectralKernel,
    sinc_kernel,
    spectral_kernel,
    admissibility_constant,
    mexican_hat,
    wavelet_transform,
    cosine_taper_bump,
    oscillation_l1_box,
    mollified_vector,
    WaveletSystem,
)
from .frames import (
    FrameSystem,
    FrameBounds,
    ReconstructionResult,
    quasi_interpolate,
    theorem35_verdict,
    lattice_sum_squares,
    heisenberg_sampling_experiment,
    wavelet_frame_bounds,
    beurling_scan,
)
