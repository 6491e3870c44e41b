"""Divisibility analysis and non-Markovianity degree for quantum dynamical maps.

Simulate time-local master equations for finite-dimensional systems, test the
resulting maps for level-k divisibility, assign a non-Markovianity degree,
and estimate the associated witness-optimization measures.
"""

from .config import DEFAULT, Tolerances, override
from .operators import (
    ChoiMatrix,
    DensityMatrix,
    HermitianOperator,
    Superoperator,
    apply,
    choi,
    extend,
    hermitian_basis,
    trace_norm,
)
from .generators import (
    ConstantRate,
    ExpPolyRate,
    GeneratorSpec,
    RateFunction,
    ScaledRate,
    SinusoidRate,
    SumRate,
    TabulatedRate,
    TanhRate,
    dephasing_spec,
    gamma_integral,
    generator_action,
    generator_superoperator,
    pauli_spec,
    pump_decay_spec,
)
from .evolution import (
    MapTrajectory,
    TimeGrid,
    analytic_dephasing_map,
    analytic_pauli_map,
    integrate,
    propagator,
)
from .divisibility import (
    KPositivityVerdict,
    NMDReport,
    admit_trajectory,
    is_completely_positive,
    is_k_positive,
    nmd,
    pauli_criteria,
    pump_decay_criteria,
    scan_divisibility,
)
from .witnesses import (
    MeasureEstimate,
    WitnessResult,
    blp_pair_search,
    blp_sigma,
    entropy_flow,
    flow_lambda,
    flow_profile,
    measure_mk,
    n_plus_minus,
    relative_entropy_flow,
)
from .bloch import (
    BlochVector,
    cp_triangle,
    from_bloch,
    pauli_relaxation_times,
    pump_decay_bloch,
    to_bloch,
    volume_ratio,
)

__version__ = "0.1.0"
