"""Closed-form upper and lower bounds on the worst-case expected code length.

Upper bounds, per demand vector (all in bits, payload = the unencrypted
multicast response, sizes are alphabet cardinalities):

    entropy form         sum_x H(payload | X=x) + 1 + ceil(log2 |X|)
                         (+ eps + h(alpha) with a leakage budget eps,
                          alpha = eps / H(X))
    cardinality form     ceil(log2(|X| (|payload| - 1) + 1)) + ceil(log2 |X|)
                         (the leading factor gains [|X| + 1] with leakage)
    deterministic form   ceil(log2(|payload| - |X| + 1)) + ceil(log2 |X|),
                         only when X is a deterministic function of the
                         payload (tested on the exact joint)

Lower bounds, global:

    L1 = max over t in 1..K of max_x H(Y_1 ... Y_{t*floor(N/t)} | X=x)

    L2 is reported in two algebraic forms that do not agree: the stated
    closed form max_t (t - t/(floor(N/t) M)) F - log2(T), and the cut-set
    form max_t t F - t M F / floor(N/t) - log2(T) / floor(N/t) derived from
    floor(N/t) H(U) + t M F + log2(T) >= t floor(N/t) F. Both require
    uncoded placement and independent files; neither is silently dropped.

ceil(log2 .) is always the exact integer form (bit length), never a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .caching import SystemParams, payload_alphabet_size, payload_distribution
from .distcore import (
    JointModel,
    binary_entropy_bits,
    ceil_log2,
    conditional,
    entropy_bits,
    marginal,
)
from .errors import DomainError

__all__ = [
    "DemandBounds",
    "L2Bounds",
    "BoundReport",
    "ub_perfect",
    "ub_epsilon",
    "lb_l1",
    "lb_l2",
    "files_exactly_independent",
]


@dataclass(frozen=True)
class DemandBounds:
    """Upper-bound panel for one demand vector.

    `nominal_length_bits` is the entropy accounting figure
    sum_x H(payload|X=x) + ceil(log2 |X|): the length of the two code parts
    before the up-to-one-bit prefix-code overhead. `ub_deterministic_bits`
    is None when X is not a deterministic function of the payload (or the
    bound argument would be non-positive).
    """

    demands: tuple
    epsilon_bits: float
    entropy_sum_bits: float
    nominal_length_bits: float
    ub_entropy_bits: float
    ub_cardinality_bits: int
    ub_deterministic_bits: int | None
    x_det_of_payload: bool
    achieved_expected_length_bits: float | None = None

    def min_upper_bound_bits(self) -> float:
        candidates = [self.ub_entropy_bits, float(self.ub_cardinality_bits)]
        if self.ub_deterministic_bits is not None:
            candidates.append(float(self.ub_deterministic_bits))
        return min(candidates)


@dataclass(frozen=True)
class L2Bounds:
    stated_bits: float
    cutset_bits: float
    applicable: bool


@dataclass(frozen=True)
class BoundReport:
    """All bound figures for one experiment configuration."""

    rows: tuple
    lb_l1_bits: float
    lb_l2: L2Bounds
    worst_case_nominal_bits: float
    worst_case_achieved_bits: float | None

    def row(self, demands: Sequence[int]) -> DemandBounds:
        demands = tuple(demands)
        for row in self.rows:
            if row.demands == demands:
                return row
        raise KeyError(f"no bound row for demands {demands}")


def _x_det_of_payload(pair) -> bool:
    owners: dict = {}
    for (a, b), _m in pair.pmf.items():
        if owners.setdefault(b, a) != a:
            return False
    return True


def _entropy_sum(pair) -> float:
    return sum(
        entropy_bits(pair.conditional_b_given_a(x))
        for x, _px in pair.a_marginal().items()
    )


def _bounds_for(model: JointModel, d, params: SystemParams, epsilon_bits: float) -> DemandBounds:
    pair = payload_distribution(model, d, params)
    n_x = len(model.x_alphabet)
    n_payload = payload_alphabet_size(params)
    entropy_sum = _entropy_sum(pair)
    log_x = ceil_log2(n_x)

    if epsilon_bits < 0:
        raise DomainError(f"leakage budget {epsilon_bits} is negative")
    if epsilon_bits > 0:
        h_x = entropy_bits(marginal(model, "x"))
        if epsilon_bits > h_x + 1e-9:
            raise DomainError(f"leakage budget {epsilon_bits} exceeds H(X) = {h_x:.12g}")
        alpha = min(1.0, epsilon_bits / h_x)
        extra = epsilon_bits + binary_entropy_bits(alpha)
        card_factor = n_x + 1
    else:
        extra = 0.0
        card_factor = 1

    ub_entropy = entropy_sum + extra + 1.0 + log_x
    ub_cardinality = ceil_log2((n_x * (n_payload - 1) + 1) * card_factor) + log_x
    det = _x_det_of_payload(pair)
    ub_det = None
    if det and n_payload - n_x + 1 >= 1:
        ub_det = ceil_log2((n_payload - n_x + 1) * card_factor) + log_x

    return DemandBounds(
        demands=tuple(d),
        epsilon_bits=float(epsilon_bits),
        entropy_sum_bits=entropy_sum,
        nominal_length_bits=entropy_sum + extra + log_x,
        ub_entropy_bits=ub_entropy,
        ub_cardinality_bits=ub_cardinality,
        ub_deterministic_bits=ub_det,
        x_det_of_payload=det,
    )


def ub_perfect(model: JointModel, d, params: SystemParams) -> DemandBounds:
    """Perfect-privacy upper bounds for one demand vector."""
    return _bounds_for(model, d, params, 0.0)


def ub_epsilon(model: JointModel, d, params: SystemParams, epsilon_bits: float) -> DemandBounds:
    """Fixed-leakage upper bounds for one demand vector."""
    return _bounds_for(model, d, params, epsilon_bits)


def lb_l1(model: JointModel, users: int) -> float:
    """Conditional-entropy lower bound over demand batch sizes t = 1..K."""
    best = 0.0
    x_masses = marginal(model, "x")
    prefixes = sorted({t * (model.file_count // t) for t in range(1, users + 1)})
    for m in prefixes:
        selector = tuple(range(1, m + 1))
        for x in x_masses.support():
            best = max(best, entropy_bits(conditional(model, selector, {"x": x})))
    return best


def lb_l2(params: SystemParams, files_independent: bool) -> L2Bounds:
    """Cache-size lower bound; applicable only for uncoded placement with
    independent files (this scheme's placement is always uncoded)."""
    n, k, f = params.files, params.users, params.file_bits
    m = params.cache_files
    log_t = math.log2(params.key_size)
    stated = max(
        float((t - Fraction(t, (n // t)) / m) * f) - log_t for t in range(1, k + 1)
    )
    cutset = max(
        t * f - float(Fraction(t, n // t) * m * f) - log_t / (n // t)
        for t in range(1, k + 1)
    )
    return L2Bounds(stated_bits=stated, cutset_bits=cutset, applicable=files_independent)


def files_exactly_independent(model: JointModel) -> bool:
    """Exact product test for the file marginals P(y_1 .. y_N)."""
    singles = [
        {y: m for y, m in marginal(model, n).items()} for n in range(1, model.file_count + 1)
    ]
    joint: dict = {}
    for (_x, ys), mass in model.support():
        joint[ys] = joint.get(ys, Fraction(0)) + mass
    from itertools import product

    for combo in product(*(s.keys() for s in singles)):
        expect = Fraction(1)
        for value, table in zip(combo, singles):
            expect *= table[value]
        if joint.get(combo, Fraction(0)) != expect:
            return False
    return True
