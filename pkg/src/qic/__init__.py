"""Coherent, one-time coherent and compatible information for small quantum systems."""
from .errors import (
    CompletenessError,
    ConvergenceError,
    DimensionError,
    InvariantError,
    NotHermitianError,
    QICError,
)
from .lambda_system import (
    LambdaParams,
    RateResult,
    SearchConfig,
    coherent_info_surface,
    lambda_channel,
    optimal_rate,
)
from .measures import (
    InfoValue,
    coherent_information,
    entropy_exchange,
    one_time_coherent_information,
    quantum_mutual_information,
    von_neumann_entropy,
)
from .povm import (
    JointDistribution,
    SphereMeasure,
    basis_measure,
    bloch_quadrature,
    compatible_information,
    epsilon_operator,
    joint_distribution,
    state_distribution,
)
from .setup import (
    PSM,
    SetupModel,
    information_capacity,
    joint_readout_distribution,
    optimize_controls,
    psm_from_projectors,
    psm_from_unitary_family,
)
from .states import (
    DensityMatrix,
    PureState,
    QuantumChannel,
    apply,
    apply_extended,
    bell_state,
    choi,
    purify,
)
from .tensor import EigenDecomposition, hermitian_eig, kron, partial_trace

__version__ = "0.1.0"
