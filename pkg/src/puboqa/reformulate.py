"""Penalty constructions that fold constraints into the objective.

Every constraint in canonical form lhs <= 0 is replaced by a polynomial that
vanishes exactly on satisfying assignments and is at least 1 on violating
ones. Four constructions are provided:

* threshold penalties (eq_penalty, le_penalty, ge_penalty) for constraints
  that compare a unit-coefficient sum of distinct binary variables against an
  integer threshold; these are binary-valued (0 or 1 everywhere) and built
  from elementary symmetric polynomials,
* product_penalty for arbitrary integer-coefficient constraints, as a product
  of shifted copies of the lhs,
* slack_penalty, the quadratic squared-slack form used for QUBO targets,
* the linearization gadget used by reduce_to_quadratic to lower polynomial
  degree at the cost of auxiliary variables.

Adding lambda-weighted penalties to the objective (compose_unconstrained)
preserves the constrained minimizers whenever each lambda is at least the
objective's range width; lambda_default returns width + 1.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Iterable, Sequence

from .model import INT_EPS, Constraint
from .pbf import Monomial, Polynomial, VarId

KIND_BINARY = "binary-valued"
KIND_PRODUCT = "product-form"
KIND_SLACK = "slack-quadratic"
KIND_GADGET = "linearization-gadget"
_KINDS = (KIND_BINARY, KIND_PRODUCT, KIND_SLACK, KIND_GADGET)

MAX_SYMMETRIC_VARS = 24
DEFAULT_PRODUCT_CAP = 20


@dataclass(frozen=True)
class PenaltyTerm:
    """One penalty polynomial plus the weight it enters the objective with.

    poly is 0 on satisfying assignments and >= 1 on violating ones. For the
    slack-quadratic kind this holds after minimizing over the slack bits
    listed in slack_vars; for the binary-valued kind poly is 0 or 1
    everywhere.
    """

    poly: Polynomial
    kind: str
    lam: float = 1.0
    slack_vars: tuple[VarId, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not self.lam > 0:
            raise ValueError(f"penalty weight must be positive, got {self.lam}")

    def with_lambda(self, lam: float) -> PenaltyTerm:
        return replace(self, lam=lam)


@dataclass(frozen=True)
class SubstitutionMap:
    """Ordered record of the pair substitutions made by reduce_to_quadratic.

    Each record (a, b, y) states that the fresh variable y stands for the
    product a*b. apply() replays the substitutions (with their gadgets) on a
    polynomial, which reproduces the quadratic output exactly.
    """

    records: tuple[tuple[VarId, VarId, VarId], ...]
    lam: float

    def apply(self, poly: Polynomial) -> Polynomial:
        out = poly
        for a, b, y in self.records:
            out = _substitute_pair(out, a, b, y) + self.lam * linearization_gadget(a, b, y).poly
        return out


# threshold penalties ---------------------------------------------------------


def eq_penalty(vars: Sequence[VarId], c: int) -> PenaltyTerm:
    """Binary-valued penalty for: exactly c of the given variables are 1.

    For c >= 1 the polynomial is
        1 + sum_{k=c}^{n} (-1)^(k-c+1) C(k,c) e_k
    and for c = 0 it is
        sum_{k=1}^{n} (-1)^(k+1) e_k
    with e_k the degree-k elementary symmetric polynomial in the variables.
    c > n is rejected: no assignment of n binary variables sums to more
    than n, so the constraint cannot be satisfied.
    """
    n = _check_threshold_args(vars, c)
    if c > n:
        raise ValueError(f"sum of {n} binary variables can never equal {c}")
    e = _elementary_symmetric(vars)
    if c == 0:
        acc = _combine(e, {k: float((-1) ** (k + 1)) for k in range(1, n + 1)})
    else:
        weights = {k: float((-1) ** (k - c + 1) * math.comb(k, c)) for k in range(c, n + 1)}
        acc = Polynomial.constant(1.0) + _combine(e, weights)
    return PenaltyTerm(acc, KIND_BINARY)


def le_penalty(vars: Sequence[VarId], c: int) -> PenaltyTerm:
    """Binary-valued penalty for: at most c of the given variables are 1.

        sum_{k=c+1}^{n} (-1)^(k-c+1) C(k-1,c) e_k

    c >= n makes the constraint vacuous and the sum empty, giving the zero
    polynomial; this includes c above the variable count, which occurs when a
    capacity bound exceeds the number of candidates it limits. c < 0 is
    rejected (a sum of binary variables is never negative).
    """
    n = _check_threshold_args(vars, c)
    if c >= n:
        return PenaltyTerm(Polynomial.zero(), KIND_BINARY)
    e = _elementary_symmetric(vars)
    weights = {
        k: float((-1) ** (k - c + 1) * math.comb(k - 1, c)) for k in range(c + 1, n + 1)
    }
    return PenaltyTerm(_combine(e, weights), KIND_BINARY)


def ge_penalty(vars: Sequence[VarId], c: int) -> PenaltyTerm:
    """Binary-valued penalty for: at least c of the given variables are 1.

        1 + sum_{k=c}^{n} (-1)^(k-c+1) C(k-1,c-1) e_k

    Requires 1 <= c <= n: c = 0 is vacuous (use the zero polynomial instead)
    and c > n is unsatisfiable.
    """
    n = _check_threshold_args(vars, c)
    if c == 0:
        raise ValueError("at-least-0 is vacuous; use the zero polynomial")
    if c > n:
        raise ValueError(f"sum of {n} binary variables can never reach {c}")
    e = _elementary_symmetric(vars)
    weights = {
        k: float((-1) ** (k - c + 1) * math.comb(k - 1, c - 1)) for k in range(c, n + 1)
    }
    return PenaltyTerm(Polynomial.constant(1.0) + _combine(e, weights), KIND_BINARY)


def _check_threshold_args(vars: Sequence[VarId], c: int) -> int:
    if len(set(vars)) != len(vars):
        raise ValueError("threshold penalties need distinct variables")
    if len(vars) > MAX_SYMMETRIC_VARS:
        raise ValueError(
            f"threshold penalty over {len(vars)} variables exceeds the "
            f"{MAX_SYMMETRIC_VARS}-variable cap"
        )
    if not isinstance(c, int) or c < 0:
        raise ValueError(f"threshold must be a non-negative int, got {c!r}")
    return len(vars)


def _elementary_symmetric(vars: Sequence[VarId]) -> list[dict[Monomial, float]]:
    """All e_0..e_n over the given variables, as raw term dicts.

    Built by convolving one variable at a time (E_k gains E_{k-1} * x), which
    produces the same C(n,k) monomials as subset enumeration without
    materializing subsets per degree.
    """
    ordered = sorted(vars)
    e: list[dict[Monomial, float]] = [{(): 1.0}]
    for v in ordered:
        e.append({})
        for k in range(len(e) - 1, 0, -1):
            grown = e[k]
            for mono in e[k - 1]:
                grown[mono + (v,)] = 1.0
    return e


def _combine(e: list[dict[Monomial, float]], weights: dict[int, float]) -> Polynomial:
    acc: dict[Monomial, float] = {}
    for k, w in weights.items():
        if w == 0.0:
            continue
        for mono in e[k]:
            acc[mono] = acc.get(mono, 0.0) + w
    return Polynomial(acc)


# product penalty -------------------------------------------------------------


def product_penalty(c: Constraint, ub_cap: int = DEFAULT_PRODUCT_CAP) -> PenaltyTerm:
    """Penalty for an arbitrary integer-coefficient constraint lhs <= 0.

    Multiplies the shifted copies lhs, lhs+1, ..., lhs+UB where UB is the sum
    of absolute coefficient values (constant included). On a satisfying
    assignment lhs lands in [-UB, 0], so one factor vanishes; on a violating
    one every factor is >= 1. The value on violations can be astronomically
    large, which is sound but numerically blunt, hence the cap on UB.
    """
    ub = 0
    for mono, coeff in c.lhs.terms.items():
        r = round(coeff)
        if abs(coeff - r) > INT_EPS:
            raise ValueError(f"product penalty needs integer coefficients, got {coeff}")
        ub += abs(int(r))
    if ub > ub_cap:
        raise ValueError(
            f"product penalty would multiply {ub + 1} factors, above the cap {ub_cap}; "
            "tighten the constraint or raise ub_cap"
        )
    out = Polynomial.constant(1.0)
    for j in range(ub + 1):
        out = out * (c.lhs + j)
    return PenaltyTerm(out, KIND_PRODUCT)


# slack penalty ---------------------------------------------------------------


def slack_penalty(c: Constraint, first_slack_id: VarId | None = None) -> PenaltyTerm:
    """Quadratic penalty (lhs + s)^2 with s a base-2 encoded slack variable.

    The slack absorbs how far lhs sits below 0: s ranges over the bit
    combinations of floor(log2(-min lhs)) + 1 fresh bits (none when the
    minimum is already 0). Minimizing over the slack bits gives 0 exactly on
    satisfying assignments; on violating ones lhs >= 1 so lhs + s >= 1 for
    every slack value and the square is >= 1. Slack values overshooting
    -min(lhs) are harmless for the same reason.

    Slack bit ids start at first_slack_id, or right after the largest id in
    lhs when not given. Callers composing several penalties should pass
    explicit ids to keep the spaces disjoint.
    """
    lhs = c.lhs
    if lhs.degree > 1:
        raise ValueError("slack penalty needs a linear lhs; quadratize first")
    lo, _ = lhs.interval_bounds()
    lo = int(round(lo))
    if lo > 0:
        raise ValueError("constraint is unsatisfiable: lhs is positive everywhere")
    need = -lo
    width = need.bit_length()
    base = first_slack_id
    if base is None:
        base = max(lhs.variables(), default=-1) + 1
    slack_ids = tuple(base + j for j in range(width))
    s_poly = Polynomial.from_terms(((sid,), 1 << j) for j, sid in enumerate(slack_ids))
    pen = (lhs + s_poly) ** 2
    return PenaltyTerm(pen, KIND_SLACK, slack_vars=slack_ids)


# quadratization --------------------------------------------------------------


def linearization_gadget(a: VarId, b: VarId, y: VarId, lam: float = 1.0) -> PenaltyTerm:
    """Penalty that is 0 exactly when y = a*b.

    The polynomial a*b - 2ay - 2by + 3y takes value 1 on (1,1,0), 1 on
    (0,1,1) and (1,0,1), 3 on (0,0,1), and 0 on every consistent triple.
    """
    poly = Polynomial({(a, b): 1.0, (a, y): -2.0, (b, y): -2.0, (y,): 3.0})
    return PenaltyTerm(poly, KIND_GADGET, lam=lam)


def reduce_to_quadratic(p: Polynomial, lam: float) -> tuple[Polynomial, SubstitutionMap]:
    """Lower a polynomial to degree <= 2 with pair substitutions.

    While any monomial of degree >= 3 remains, the variable pair occurring in
    the most such monomials (ties broken by lexicographically smallest pair)
    is replaced everywhere by a fresh variable y, and lam times the
    linearization gadget for (pair, y) is added. With lam at least the
    interval width of the evolving polynomial the extended minimum equals the
    original minimum; lambda_default(p) is a safe choice.
    """
    if not lam > 0:
        raise ValueError("gadget weight must be positive")
    current = p
    records: list[tuple[VarId, VarId, VarId]] = []
    next_var = max(p.variables(), default=-1) + 1
    while True:
        counts: Counter[tuple[VarId, VarId]] = Counter()
        for mono in current.terms:
            if len(mono) >= 3:
                for pair in combinations(mono, 2):
                    counts[pair] += 1
        if not counts:
            break
        top = max(counts.values())
        a, b = min(pair for pair, cnt in counts.items() if cnt == top)
        y = next_var
        next_var += 1
        current = _substitute_pair(current, a, b, y) + lam * linearization_gadget(a, b, y).poly
        records.append((a, b, y))
    return current, SubstitutionMap(tuple(records), lam)


def _substitute_pair(p: Polynomial, a: VarId, b: VarId, y: VarId) -> Polynomial:
    acc: dict[Monomial, float] = {}
    for mono, coeff in p.terms.items():
        if a in mono and b in mono:
            mono = tuple(sorted((set(mono) - {a, b}) | {y}))
        acc[mono] = acc.get(mono, 0.0) + coeff
    return Polynomial(acc)


# assembly --------------------------------------------------------------------


def lambda_default(objective: Polynomial) -> float:
    """Penalty weight that always separates feasible from infeasible points.

    Any weight at least max(objective) - min(objective) works; this returns
    the interval-bounds width plus one, which is cheap to compute and strict.
    """
    lo, hi = objective.interval_bounds()
    return (hi - lo) + 1.0


def compose_unconstrained(objective: Polynomial, penalties: Iterable[PenaltyTerm]) -> Polynomial:
    """objective + sum of lam * penalty over all terms, as one Polynomial."""
    out = objective
    for term in penalties:
        if not term.lam > 0:
            raise ValueError("penalty weights must be positive")
        out = out + term.lam * term.poly
    return out


def penalty_for(c: Constraint) -> PenaltyTerm:
    """Pick the penalty construction a canonical constraint calls for.

    Unit-coefficient sums against an integer threshold use the binary-valued
    threshold penalties (a vacuous threshold yields the zero polynomial);
    everything else, weighted sums included, goes through product_penalty.
    """
    o = c.origin
    if o.unit_sum:
        if o.sum_relation == "<=":
            if o.sum_bound < 0:
                raise ValueError("constraint is unsatisfiable: sum below a negative bound")
            return le_penalty(list(o.sum_vars), o.sum_bound)
        if o.sum_bound <= 0:
            return PenaltyTerm(Polynomial.zero(), KIND_BINARY)
        return ge_penalty(list(o.sum_vars), o.sum_bound)
    return product_penalty(c)
