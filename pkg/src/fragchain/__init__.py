"""fragchain: exact numerics for kinetically constrained Rydberg chains.

Hilbert-space fragmentation analysis, many-body scar diagnostics, and
thermalization restricted to Krylov subspaces, for desk-scale chains.
"""

__version__ = "0.1.0"

from .builders import (
    DriveSpec,
    EffectiveModel,
    FfmSpec,
    OperatorMatrix,
    build_effective,
    build_ffm,
    build_krt_subarray,
    build_rydberg,
    ffm_sidebands,
)
from .chain import (
    Basis,
    ChainSpec,
    ConfigClass,
    ProductState,
    classical_energy,
    classify_configuration,
    enumerate_basis,
    hamming_distance,
    primary_v0_block,
)
from .evolution import (
    EvolutionPlan,
    QuantumState,
    evolve_ffm,
    evolve_static,
    product_state_vector,
    sample_grid,
)
from .fragmentation import (
    KrylovDecomposition,
    SortedBasis,
    component_states,
    connected_components,
    count_domain_walls,
    find_frozen_states,
    frozen_state_count_scan,
    matrix_plot,
    sorted_basis,
)
from .kernels import KERNEL_BACKEND
from .noise import NoiseSpec, ensemble_trace, interaction_disorder, sample_realization, spam_channel
from .observables import (
    SubarraySpec,
    bipartite_entropy,
    fourier_spectrum,
    ground_density,
    microstate_histogram,
    single_site_entropy,
    site_expectations,
    staggered_magnetization,
    two_body_correlator,
)
from .scars import fit_oscillation, scar_scan, z6_scar_check
from .thermal import (
    MicrocanonicalEnsemble,
    build_ensemble,
    eigen_observable_scatter,
    ensemble_expectation,
    time_average,
)
