"""Compositional dynamical systems over polynomial interfaces.

Open systems are stateful processes whose shape of interaction — what they
can show, and what they can be told in response — is a polynomial of spaces.
The package provides the interfaces and lenses (``poly``), an exact
probability layer with Dirac/finite/Gaussian regimes (``dist``), open systems
with flow laws, reindexing and vector fields (``systems``), random systems
and bundles over measure-preserving bases (``random_bundle``), hierarchical
systems whose outputs are lenses, with quasi-bisimilarity and a dynamical
Bayes' rule (``hier``), and Gaussian predictive-processing stacks
(``laplace``).
"""

from .spaces import (
    DistSpace,
    EuclidSpace,
    FiniteSpace,
    ProdSpace,
    Space,
    SpaceError,
    UnitSpace,
    cardinality,
    check_point,
    contains,
    dist_space,
    euclid,
    euclid_dims,
    expand_point,
    finite,
    flatten_floats,
    is_finite,
    normalize_point,
    normalize_space,
    point_distance,
    point_from_json,
    point_to_json,
    points,
    prod,
    space_from_json,
    space_to_json,
    unflatten_floats,
    unit,
)
from .dist import (
    AffineMap,
    Categorical,
    Dirac,
    Dist,
    DistError,
    Gaussian,
    GaussianKernel,
    Rng,
    bind,
    categorical,
    dirac,
    dist_distance,
    dist_equal,
    dist_from_json,
    dist_to_json,
    dst,
    finite_items,
    gaussian,
    gaussian1,
    kleisli_compose,
    kleisli_extend,
    prob,
    pushforward,
    sample,
    sample_many,
    uniform,
)
from .poly import (
    DETERMINISTIC,
    STOCHASTIC,
    PolyError,
    PolyMap,
    Polynomial,
    Section,
    TimeMonoid,
    all_sections,
    check_section,
    compose_map,
    constant_section,
    det_polymap,
    dirac_point,
    dist_key,
    id_map,
    linear,
    maps_agree,
    mk_polymap,
    monomial,
    polymap_key,
    pull_section,
    section,
    tabulated,
    tensor,
    tensor_map,
    time_nat,
    time_real,
    trivial_section,
    y,
)
from .systems import (
    ClosedSystem,
    DiscreteMap,
    NCoalg,
    OpenSystemError,
    System,
    VectorField,
    check_closed_flow,
    check_flow,
    closed_from_kernel,
    closure,
    from_vector_field,
    is_system_morphism,
    mk_system,
    reindex,
    rk4_step,
    roundtrip_ncoalg,
    systems_agree,
    to_ncoalg,
)
from .random_bundle import (
    BundleSystem,
    MPMorphism,
    MeasurePreservingSystem,
    ProbabilitySpace,
    RandomSystem,
    RandomSystemError,
    check_bundle,
    check_measure_preserving,
    check_mp_morphism,
    check_random_system,
    mk_bundle,
    mk_measure_preserving,
    mk_probability_space,
    mk_random_system,
    ou_demo,
    ou_exact_closed,
    ou_transition_kernel,
    rebase_bundle,
    rebase_rds,
    reindex_bundle,
    reindex_rds,
)
from .hier import (
    BayesInverse,
    HierError,
    HierSystem,
    HomSection,
    Trace,
    bayes_check,
    compose_hier,
    copy_system,
    discard_system,
    exact_bayes,
    function_system,
    hibi_compose,
    hibi_pair_hom,
    hier_from_tables,
    hier_to_tables,
    hom_sections,
    id_hier,
    mk_hier,
    prior_system,
    quasi_bisim,
    stochastic_channel_system,
    swap_system,
    tensor_hier,
    trace,
)
from .laplace import (
    EnergyTerms,
    GaussianChannel,
    GaussianState,
    LaplaceConfig,
    LaplaceError,
    as_state,
    build_laplace,
    descend,
    energy,
    energy_terms,
    free_energy_laplace,
    free_energy_second_order,
    gaussian_entropy,
    grad_energy,
    hessian_energy,
    linear_channel,
    mean_path,
    mk_state,
    rho_update,
    run_stack,
    sigma_star,
    stack,
    state_dist,
)

__version__ = "0.1.0"
