"""Constructive functional-representation channels.

Given an exact joint of (X, C), the zero-leakage construction builds a
representation variable U with U independent of X and C a deterministic
function of (U, X):

    for each x, lay the conditional masses P(C=c | X=x) out as consecutive
    half-open intervals of [0, 1) in the global C order; the cells of the
    common refinement of all per-x interval partitions form the U alphabet.
    Every cell sits inside exactly one c-interval of each x, which defines
    the decoding map phi(x, u) -> c, and the cell widths are the U pmf for
    every x simultaneously, which is the independence.

Breakpoints are exact rationals merged by exact equality; floating-point
breakpoints would corrupt the cell count, and the cardinality guarantees
below count cells. With support sizes |X| and |C|:

    cells <= |X| (|C| - 1) + 1      always,
    cells <= |C| - |X| + 1          when X is a deterministic function of C,
    H(U) <= sum_x H(C | X=x).

The fixed-leakage variant adjoins a randomized-response component J that
equals X with probability alpha = eps / H(X) and otherwise a reserved
symbol outside every alphabet. The composite U = (base cell, J) then leaks
exactly eps = alpha * H(X) bits about X while C stays decodable from
(U, X), at a cardinality cost factor of |X| + 1 and an entropy cost of
eps + h(alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .distcore import (
    Alphabet,
    Distribution,
    JointPair,
    binary_entropy_bits,
    entropy_bits,
    exact_independence,
    mutual_information_bits,
)
from .errors import DomainError, ModelError

__all__ = [
    "REVEAL",
    "FrlChannel",
    "EfrlChannel",
    "ChannelReport",
    "build_frl",
    "build_efrl",
    "sample_u",
    "invert_phi",
    "verify_channel",
]


class _RevealSymbol:
    """Reserved label for the no-reveal outcome of the randomized response;
    object identity keeps it outside every user alphabet."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "<no-reveal>"


REVEAL = _RevealSymbol()

ZERO = Fraction(0)
ONE = Fraction(1)


def _draw_exact(pairs: Sequence[tuple], rng) -> object:
    """Draw a label from exact Fraction weights using integer arithmetic."""
    denom = math.lcm(*(w.denominator for _label, w in pairs))
    total = 0
    cumulative = []
    for label, w in pairs:
        total += w.numerator * (denom // w.denominator)
        cumulative.append((total, label))
    pick = rng.randrange(total)
    for bound, label in cumulative:
        if pick < bound:
            return label
    raise AssertionError("unreachable: cumulative weights exhausted")


@dataclass(frozen=True)
class FrlChannel:
    """Zero-leakage representation channel for a pair (X, target).

    Attributes:
        x_alphabet: full X alphabet in canonical order (may exceed support).
        target_values: target support in global order.
        p_x: exact marginal of X (support only).
        cells: refinement cells as (lo, hi) Fractions, left to right; the
            U alphabet is their index set 0..len(cells)-1.
        u_pmf: exact cell-width distribution of U.
        intervals: per x, the tuple of (target value, lo, hi) intervals.
        phi: (x, u) -> target value, total on supp(X) x cells.
    """

    x_alphabet: Alphabet
    target_values: tuple
    p_x: Mapping[object, Fraction]
    cells: tuple
    u_pmf: Distribution
    intervals: Mapping[object, tuple]
    phi: Mapping[tuple, object]

    def u_labels(self) -> tuple:
        return self.u_pmf.alphabet.symbols

    def u_mass(self, u) -> Fraction:
        return self.u_pmf.mass(u)

    def x_support(self) -> tuple:
        return tuple(x for x in self.x_alphabet if x in self.p_x)

    def target_given(self, x, u) -> object:
        try:
            return self.phi[(x, u)]
        except KeyError:
            raise DomainError(f"(x={x!r}, u={u!r}) is not jointly possible") from None

    def u_support_given(self, x, c) -> tuple:
        """Admissible cells and their exact conditional masses given (x, c)."""
        if x not in self.intervals:
            raise DomainError(f"x={x!r} has zero probability")
        span = next(((lo, hi) for value, lo, hi in self.intervals[x] if value == c), None)
        if span is None:
            raise DomainError(f"target {c!r} has zero probability given x={x!r}")
        lo, hi = span
        width = hi - lo
        out = []
        for u, (clo, chi) in enumerate(self.cells):
            if clo >= lo and chi <= hi:
                out.append((u, (chi - clo) / width))
        return tuple(out)

    def joint_with_x(self) -> JointPair:
        """Exact joint of (X, U); product form by construction."""
        pmf = {
            (x, u): px * w
            for x, px in self.p_x.items()
            for u, w in self.u_pmf.items()
        }
        return JointPair(self.x_alphabet, self.u_pmf.alphabet, pmf)

    def conditional_target_entropies(self) -> dict:
        """x -> H(target | X=x), from the stored interval widths."""
        out = {}
        for x, spans in self.intervals.items():
            out[x] = entropy_bits(
                Distribution.from_pairs((value, hi - lo) for value, lo, hi in spans)
            )
        return out


def build_frl(pair: JointPair) -> FrlChannel:
    """Build the zero-leakage channel for pair = joint of (X, target)."""
    p_x = {a: m for a, m in pair.a_marginal().items()}
    intervals: dict[object, tuple] = {}
    breakpoints = {ZERO, ONE}
    for x in pair.a_alphabet:
        if x not in p_x:
            continue
        cond = pair.conditional_b_given_a(x)
        spans = []
        acc = ZERO
        for value, mass in cond.items():
            spans.append((value, acc, acc + mass))
            acc += mass
            breakpoints.add(acc)
        if acc != ONE:
            raise ModelError(f"conditional masses for x={x!r} sum to {acc}")
        intervals[x] = tuple(spans)

    edges = sorted(breakpoints)
    cells = tuple((lo, hi) for lo, hi in zip(edges, edges[1:]))
    u_pmf = Distribution.from_pairs((u, hi - lo) for u, (lo, hi) in enumerate(cells))

    phi: dict[tuple, object] = {}
    for x, spans in intervals.items():
        for u, (clo, chi) in enumerate(cells):
            for value, lo, hi in spans:
                if clo >= lo and chi <= hi:
                    phi[(x, u)] = value
                    break
            else:
                raise AssertionError(f"cell {u} not covered for x={x!r}")

    return FrlChannel(
        x_alphabet=pair.a_alphabet,
        target_values=pair.b_marginal().alphabet.symbols,
        p_x=p_x,
        cells=cells,
        u_pmf=u_pmf,
        intervals=intervals,
        phi=phi,
    )


@dataclass(frozen=True)
class EfrlChannel:
    """Fixed-leakage composite channel: U = (base cell, J).

    J reveals X with probability alpha and is the reserved symbol
    otherwise; the coin is independent of everything else, so the composite
    leaks exactly alpha * H(X) bits while the base part stays exactly
    independent of X.
    """

    base: FrlChannel
    alpha: Fraction
    epsilon_bits: float
    x_entropy_bits: float
    j_values: tuple
    u_pmf: Distribution

    @property
    def x_alphabet(self) -> Alphabet:
        return self.base.x_alphabet

    @property
    def target_values(self) -> tuple:
        return self.base.target_values

    @property
    def p_x(self) -> Mapping[object, Fraction]:
        return self.base.p_x

    def u_labels(self) -> tuple:
        return self.u_pmf.alphabet.symbols

    def x_support(self) -> tuple:
        return self.base.x_support()

    def _j_conditional(self, x) -> tuple:
        out = []
        if self.alpha < 1:
            out.append((REVEAL, ONE - self.alpha))
        if self.alpha > 0:
            out.append((x, self.alpha))
        return tuple(out)

    def target_given(self, x, u) -> object:
        cell, j = u
        admissible = {jv for jv, _w in self._j_conditional(x)}
        if j not in admissible:
            raise DomainError(f"(x={x!r}, u={u!r}) is not jointly possible")
        return self.base.target_given(x, cell)

    def u_support_given(self, x, c) -> tuple:
        base_support = self.base.u_support_given(x, c)
        return tuple(
            ((cell, j), w * jw)
            for cell, w in base_support
            for j, jw in self._j_conditional(x)
        )

    def joint_with_x(self) -> JointPair:
        pmf = {}
        for x, px in self.p_x.items():
            for cell, w in self.base.u_pmf.items():
                for j, jw in self._j_conditional(x):
                    pmf[(x, (cell, j))] = px * w * jw
        return JointPair(self.x_alphabet, self.u_pmf.alphabet, pmf)


def build_efrl(pair: JointPair, epsilon_bits: float) -> EfrlChannel:
    """Build the composite channel leaking exactly `epsilon_bits` about X.

    Requires 0 <= epsilon_bits <= H(X); the reveal probability is
    alpha = epsilon_bits / H(X).
    """
    if epsilon_bits < 0:
        raise DomainError(f"leakage budget {epsilon_bits} is negative")
    base = build_frl(pair)
    h_x = entropy_bits(pair.a_marginal())
    if epsilon_bits > 0 and h_x == 0.0:
        raise DomainError("positive leakage budget with H(X) = 0")
    if epsilon_bits > h_x + 1e-9:
        raise DomainError(f"leakage budget {epsilon_bits} exceeds H(X) = {h_x:.12g}")
    if epsilon_bits == 0 or h_x == 0.0:
        alpha = ZERO
    else:
        alpha = min(ONE, Fraction(epsilon_bits / h_x))

    j_order = (REVEAL,) + tuple(x for x in pair.a_alphabet if x in base.p_x)
    j_marginal: dict = {}
    if alpha < 1:
        j_marginal[REVEAL] = ONE - alpha
    if alpha > 0:
        for x, px in base.p_x.items():
            j_marginal[x] = alpha * px
    u_pmf = Distribution.from_pairs(
        ((cell, j), w * j_marginal[j])
        for cell, w in base.u_pmf.items()
        for j in j_order
        if j in j_marginal
    )
    return EfrlChannel(
        base=base,
        alpha=alpha,
        epsilon_bits=float(epsilon_bits),
        x_entropy_bits=h_x,
        j_values=tuple(j for j in j_order if j in j_marginal),
        u_pmf=u_pmf,
    )


def sample_u(channel, x, c, rng):
    """Draw U from the exact conditional P(U | X=x, target=c).

    The draw uses integer arithmetic over a common denominator, so the
    conditional is honored exactly and a seeded rng reproduces the stream.
    """
    support = channel.u_support_given(x, c)
    if len(support) == 1:
        return support[0][0]
    return _draw_exact(support, rng)


def invert_phi(channel, x, u):
    """The unique target value consistent with (x, u)."""
    return channel.target_given(x, u)


@dataclass(frozen=True)
class ChannelReport:
    """Verification summary; `violations` names every failed guarantee."""

    leakage_bits: float
    exact_independent: bool
    residual_target_entropy_bits: float
    u_cardinality: int
    cardinality_bound: int
    x_det_of_target: bool
    det_cardinality_bound: int | None
    u_entropy_bits: float
    entropy_bound_bits: float
    entropy_slack_bits: float
    epsilon_target_bits: float | None
    leakage_deviation_bits: float | None
    epsilon_above_target_mi: bool
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def _x_det_of_target(pair: JointPair) -> bool:
    owners: dict = {}
    for (a, b), _m in pair.pmf.items():
        if owners.setdefault(b, a) != a:
            return False
    return True


def _target_joint(channel) -> JointPair:
    """Exact joint of (X, target) as the channel represents it."""
    base = channel.base if isinstance(channel, EfrlChannel) else channel
    pmf = {}
    for x, spans in base.intervals.items():
        for value, lo, hi in spans:
            pmf[(x, value)] = base.p_x[x] * (hi - lo)
    return JointPair(base.x_alphabet, Alphabet(base.target_values), pmf)


def _residual_entropy(channel) -> float:
    """H(target | U, X) from the exact triple joint; 0 iff phi is total."""
    base = channel.base if isinstance(channel, EfrlChannel) else channel
    total = 0.0
    for x, spans in base.intervals.items():
        px = base.p_x[x]
        for u, (clo, chi) in enumerate(base.cells):
            masses = [
                min(chi, hi) - max(clo, lo)
                for _value, lo, hi in spans
                if min(chi, hi) > max(clo, lo)
            ]
            if len(masses) > 1:
                total += float(px) * entropy_bits(
                    Distribution.from_pairs((i, m / sum(masses)) for i, m in enumerate(masses))
                ) * float(sum(masses))
    return total


def verify_channel(channel) -> ChannelReport:
    """Recompute every guarantee of a built channel from exact joints."""
    is_efrl = isinstance(channel, EfrlChannel)
    base = channel.base if is_efrl else channel
    joint_xu = channel.joint_with_x()
    pair_xc = _target_joint(channel)

    leakage = mutual_information_bits(joint_xu)
    independent = exact_independence(joint_xu)
    residual = _residual_entropy(channel)

    n_x = len(base.p_x)
    n_c = sum(1 for _ in pair_xc.b_marginal().support())
    cardinality = len(channel.u_pmf.alphabet)
    card_bound = n_x * (n_c - 1) + 1
    det = _x_det_of_target(pair_xc)
    det_bound = n_c - n_x + 1 if det else None
    if is_efrl:
        card_bound *= n_x + 1
        if det_bound is not None:
            det_bound *= n_x + 1

    sum_cond = sum(base.conditional_target_entropies().values())
    u_entropy = entropy_bits(channel.u_pmf)
    if is_efrl:
        entropy_bound = sum_cond + channel.epsilon_bits + binary_entropy_bits(float(channel.alpha))
        eps_target = channel.epsilon_bits
        deviation = abs(leakage - eps_target)
        eps_above_mi = eps_target > mutual_information_bits(pair_xc) + 1e-9
    else:
        entropy_bound = sum_cond
        eps_target = None
        deviation = None
        eps_above_mi = False
    slack = entropy_bound - u_entropy

    violations = []
    if is_efrl:
        if deviation > 1e-9:
            violations.append(f"leakage {leakage!r} deviates from target {eps_target!r}")
    else:
        if not independent:
            violations.append("joint of (X, U) does not factorize exactly")
        if leakage != 0.0:
            violations.append(f"leakage {leakage!r} is not exactly zero")
    if residual != 0.0:
        violations.append(f"H(target|U,X) = {residual!r} is not zero")
    if cardinality > card_bound:
        violations.append(f"|U| = {cardinality} exceeds bound {card_bound}")
    if det_bound is not None and cardinality > det_bound:
        violations.append(f"|U| = {cardinality} exceeds deterministic-case bound {det_bound}")
    if slack < -1e-9:
        violations.append(f"H(U) = {u_entropy:.12g} exceeds entropy bound {entropy_bound:.12g}")

    return ChannelReport(
        leakage_bits=leakage,
        exact_independent=independent,
        residual_target_entropy_bits=residual,
        u_cardinality=cardinality,
        cardinality_bound=card_bound,
        x_det_of_target=det,
        det_cardinality_bound=det_bound,
        u_entropy_bits=u_entropy,
        entropy_bound_bits=entropy_bound,
        entropy_slack_bits=slack,
        epsilon_target_bits=eps_target,
        leakage_deviation_bits=deviation,
        epsilon_above_target_mi=eps_above_mi,
        violations=tuple(violations),
    )
