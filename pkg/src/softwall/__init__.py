"""Soft-wall terminations of periodic tight-binding operators.

Bulk Bloch bands, finite edge truncations with a translating Lipschitz wall,
spectral flows by counting and by the projector-rank partition definition,
dislocated-ring counting identities, and 2D lattices reduced to 1D fibers.
"""

from .core import (
    BandStructure,
    ConvolutionKernel,
    EInBand,
    Gap,
    GapCatalog,
    PeriodicJacobi,
    RangeExceeded,
    SoftwallError,
    band_structure,
    bloch_fiber,
    count_bands_below,
    fold_kperiodic,
    folded_momenta,
    gap_catalog,
    load_kernel,
    save_kernel,
    ssh_kernel,
    supercell_jacobi,
    truncate_kernel,
)
from .walls import (
    SaturationNotFound,
    SoftWallProfile,
    custom_table,
    eval_wall,
    find_saturation_point,
    linear_ramp,
    shifted_wall_blocks,
    smooth_sqrt,
    steep_wall,
    wall_preset,
    wall_spectrum,
)
from .edge import (
    BoxTooSmall,
    EdgeMode,
    EdgeSweep,
    EdgeTruncation,
    assemble_edge,
    edge_sweep_t,
    eigensolve_classify,
)
from .specflow import (
    EOnEigenvalue,
    PartitionPlan,
    PlanInfeasible,
    SpectralFlowResult,
    flow_counting,
    flow_partition,
    verify_density,
    verify_theorem_flow,
)
from .dislocation import (
    CutStencil,
    DislocatedRing,
    TooFewCells,
    assemble_ring,
    cut_operator,
    left_block_gap_check,
    open_dislocated_matrix,
    projector_rank_convergence,
    ring_flow_check,
    ring_sites,
)
from .lattice2d import (
    BravaisLattice2D,
    CommensurateCut,
    GaugeResult,
    NotCoprime,
    TightBinding2D,
    ZeroIndex,
    bloch2d,
    dirac_points,
    effective_interval_length,
    fiber_gap_at,
    folded_fiber_check,
    gauge_transform,
    k2_gap_scan,
    load_tb2d,
    reduce_to_1d,
    save_tb2d,
    ssh_scalar_chain,
    supercell_cut,
    wall2d_blocks,
    wall_profile_1d,
    wallace_preset,
)

__version__ = "0.1.0"
