"""Desk-scale toolkit for typical subspaces, mean entropy and pressure on
finite spin chains."""

from .blockop import (
    BlockAlgebra,
    EigenDecomposition,
    HermitianElement,
    Interval,
    Projection,
    eigendecompose,
    matrix_exp,
    matrix_log,
    spectral_projection,
)
from .chain import (
    AssumptionReport,
    ChainModel,
    block_interval_factorization_test,
    check_assumption,
    restrict_density,
)
from .entropy import (
    LambdaTauReport,
    MeanEntropyEstimate,
    lambda_tau,
    mean_entropy,
    relative_entropy,
    subadditivity_check,
    von_neumann_entropy,
)
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    InvariantError,
    PositivityError,
    QaepError,
    ShapeError,
    VolumeError,
)
from .pressure import (
    GibbsBoundRecord,
    PressureReport,
    VariationalRecord,
    finite_volume_pressure,
    gibbs_lower_bound,
    one_site_pressure_oracle,
    oracle_pressure,
    period_mean_entropy,
    pressure_limit,
    product_gibbs_candidate,
    product_state_grid,
    transfer_matrix_oracle,
    variational_inequality,
)
from .states import (
    ErgodicityCertificate,
    FinitelyCorrelatedState,
    GibbsBlockState,
    MixtureState,
    ProductState,
    StateModel,
)
from .typicality import (
    DeviationParameters,
    TypicalityReport,
    UpperDeviationRecord,
    ergodic_average,
    kyfan_projection,
    lower_deviation,
    relative_information_operator,
    typical_projection,
    upper_deviation_argument,
    verify_typicality,
    window_projection,
    window_report,
)

__version__ = "0.1.0"
