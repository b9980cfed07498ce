"""Economic equilibria via a positive-start homotopy for complementarity problems."""

from .ncp import (
    EvaluationError,
    HomotopyPoint,
    NcpProblem,
    eval_F,
    eval_H,
    fd_jacobian,
    jac_H,
    ncp_residual,
)
from .tracer import (
    CorrectorFailure,
    NcpSolution,
    NoConvergenceError,
    SingularJacobianError,
    TraceConfig,
    TraceResult,
    adapt_steplength,
    corrector,
    least_norm_solve,
    predictor,
    solve_ncp,
    tangent,
    trace,
)
from .economy import (
    Consumer,
    EquilibriumReport,
    ExchangeEconomy,
    KnownEquilibrium,
    ModelError,
    ProductionEconomy,
    compile_model,
    compute_equilibrium,
    demand,
    excess_demand,
    exchange_ncp,
    normalize_prices,
    production_ncp,
)
from .catalog import BUILTIN_IDS, builtin_example

__version__ = "0.1.0"
