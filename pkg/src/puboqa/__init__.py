"""Constrained integer programs -> unconstrained binary polynomials -> QAOA.

The pipeline: model a polynomial integer program (model), binarize it, fold
constraints into the objective as penalties (reformulate), and minimize the
resulting pseudo-Boolean polynomial (pbf) with a simulated QAOA loop (qaoa).
The extbp module carries the extended bin packing benchmark with its PUBO
and QUBO encodings; harness is the command-line front end.
"""

from .extbp import (
    Classification,
    EbpAssignment,
    EbpInstance,
    Encoding,
    brute_force,
    builtin_instance,
    classify,
    encode,
    is_feasible,
    objective_value,
    to_pubo,
    to_qubo,
)
from .model import BinCodec, Constraint, ConstraintOrigin, IntVar, Problem, binarize, canonicalize
from .pbf import Polynomial
from .qaoa import (
    CostTable,
    QaoaConfig,
    RunRecord,
    build_cost_table,
    estimate_loss,
    evolve,
    optimize,
    run,
    sample,
)
from .reformulate import (
    PenaltyTerm,
    SubstitutionMap,
    compose_unconstrained,
    eq_penalty,
    ge_penalty,
    lambda_default,
    le_penalty,
    penalty_for,
    product_penalty,
    reduce_to_quadratic,
    slack_penalty,
)

__version__ = "0.1.0"

__all__ = [
    "BinCodec",
    "Classification",
    "Constraint",
    "ConstraintOrigin",
    "CostTable",
    "EbpAssignment",
    "EbpInstance",
    "Encoding",
    "IntVar",
    "PenaltyTerm",
    "Polynomial",
    "Problem",
    "QaoaConfig",
    "RunRecord",
    "SubstitutionMap",
    "binarize",
    "brute_force",
    "build_cost_table",
    "builtin_instance",
    "canonicalize",
    "classify",
    "compose_unconstrained",
    "encode",
    "eq_penalty",
    "estimate_loss",
    "evolve",
    "ge_penalty",
    "is_feasible",
    "lambda_default",
    "le_penalty",
    "objective_value",
    "optimize",
    "penalty_for",
    "product_penalty",
    "reduce_to_quadratic",
    "run",
    "sample",
    "slack_penalty",
    "to_pubo",
    "to_qubo",
]
