"""Exact finite probability engine.

All probability mass is carried as `fractions.Fraction`, so marginalization,
conditioning, and independence tests are exact; the only floating-point step
is the logarithm when an entropy or mutual information is reported in bits.
This split matters because the privacy guarantees audited downstream are
exact equalities (I = 0, I = eps): independence must be *decidable*, not
approximated through a float threshold.

Conventions:
    - entropies are base-2 with 0*log(0) := 0;
    - supports are computed, never declared: zero-mass outcomes are dropped
      when a distribution is built (cardinality bounds downstream count
      support sizes);
    - ceil(log2 n) is computed from the integer bit length, never through
      floating point, to avoid off-by-one at powers of two.

Variable selectors (for `marginal` / `conditional`):
    "x"       the private variable
    3         file 3 (1-based)
    "y3"      file 3, same as the bare int
    "y3b1"    bit 1 of file 3 (1-based, bit 1 = most significant)
    a sequence of the above selects a tuple-valued variable
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import DomainError, ModelError, UsageError

__all__ = [
    "Alphabet",
    "Distribution",
    "JointModel",
    "JointPair",
    "as_fraction",
    "ceil_log2",
    "binary_entropy_bits",
    "marginal",
    "conditional",
    "joint_pair",
    "pushforward",
    "entropy_bits",
    "conditional_entropy_bits",
    "conditional_entropies_by_value",
    "mutual_information_bits",
    "exact_independence",
]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, and exact "a/b" strings; floats are rejected
    (a float is evidence that exactness was already lost upstream)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"cannot parse rational {value!r}") from exc
    raise UsageError(f"expected int, Fraction, or 'a/b' string, got {type(value).__name__}")


def ceil_log2(n: int) -> int:
    """ceil(log2(n)) for a positive integer, exactly."""
    if n < 1:
        raise UsageError(f"ceil_log2 needs a positive integer, got {n}")
    return (n - 1).bit_length()


def _log2_fraction(q: Fraction) -> float:
    return math.log2(q.numerator) - math.log2(q.denominator)


def binary_entropy_bits(p: float) -> float:
    """h(p) = -p log p - (1-p) log (1-p) in bits, h(0) = h(1) = 0."""
    if p < 0.0 or p > 1.0:
        raise DomainError(f"binary entropy argument {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of opaque labels; position breaks all ties."""

    symbols: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        index = {}
        for pos, label in enumerate(symbols):
            if label in index:
                raise ModelError(f"duplicate alphabet label {label!r}")
            index[label] = pos
        object.__setattr__(self, "_index", index)

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"label {label!r} not in alphabet") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator:
        return iter(self.symbols)


@dataclass(frozen=True)
class Distribution:
    """Exact pmf over an Alphabet; masses aligned with alphabet order."""

    alphabet: Alphabet
    masses: tuple

    def __post_init__(self):
        masses = tuple(as_fraction(m) for m in self.masses)
        object.__setattr__(self, "masses", masses)
        if len(masses) != len(self.alphabet):
            raise ModelError("mass vector length does not match alphabet")
        if any(m < 0 for m in masses):
            raise ModelError("negative probability mass")
        total = sum(masses, start=ZERO)
        if total != ONE:
            raise ModelError(f"masses sum to {total}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "Distribution":
        """Build from (label, mass) pairs in the given order, dropping zeros."""
        labels, masses = [], []
        for label, mass in pairs:
            mass = as_fraction(mass)
            if mass == 0:
                continue
            labels.append(label)
            masses.append(mass)
        if not labels:
            raise ModelError("empty support")
        return cls(Alphabet(tuple(labels)), tuple(masses))

    def mass(self, label) -> Fraction:
        return self.masses[self.alphabet.index(label)]

    def items(self) -> Iterator[tuple]:
        return zip(self.alphabet.symbols, self.masses)

    def support(self) -> tuple:
        return tuple(s for s, m in self.items() if m > 0)


@dataclass(frozen=True)
class JointModel:
    """Exact joint pmf over (X, Y_1, ..., Y_N) with F-bit file values.

    `pmf` maps (x_label, (y_1, ..., y_N)) to a positive Fraction; zero
    entries are dropped at construction. Immutable after construction and
    safe to share across threads.
    """

    x_alphabet: Alphabet
    file_count: int
    file_bits: int
    pmf: Mapping[tuple, Fraction]

    def __post_init__(self):
        if self.file_count < 1 or self.file_bits < 1:
            raise ModelError("file_count and file_bits must be positive")
        limit = 1 << self.file_bits
        cleaned: dict[tuple, Fraction] = {}
        for key, mass in self.pmf.items():
            x, ys = key
            ys = tuple(ys)
            mass = as_fraction(mass)
            if mass < 0:
                raise ModelError(f"negative mass at {key}")
            if mass == 0:
                continue
            if x not in self.x_alphabet:
                raise ModelError(f"pmf references unknown x label {x!r}")
            if len(ys) != self.file_count:
                raise ModelError(f"entry {key} has {len(ys)} files, expected {self.file_count}")
            for y in ys:
                if not isinstance(y, int) or y < 0 or y >= limit:
                    raise ModelError(f"file value {y!r} does not fit in {self.file_bits} bits")
            cleaned[(x, ys)] = cleaned.get((x, ys), ZERO) + mass
        if not cleaned:
            raise ModelError("joint model has empty support")
        total = sum(cleaned.values(), start=ZERO)
        if total != ONE:
            raise ModelError(f"joint masses sum to {total}, not 1")
        ordered = dict(
            sorted(cleaned.items(), key=lambda kv: (self.x_alphabet.index(kv[0][0]), kv[0][1]))
        )
        object.__setattr__(self, "pmf", ordered)

    def support(self) -> Iterator[tuple]:
        """Yields ((x, ys), mass) in canonical (x order, y tuple) order."""
        return iter(self.pmf.items())

    def x_support(self) -> tuple:
        seen = {x for (x, _ys) in self.pmf}
        return tuple(x for x in self.x_alphabet if x in seen)


@dataclass(frozen=True)
class JointPair:
    """Exact joint pmf of a pair of variables (A, B).

    Alphabets give the canonical orders and may include zero-mass labels
    (the declared alphabet can exceed the support); the pmf holds only
    positive cells.
    """

    a_alphabet: Alphabet
    b_alphabet: Alphabet
    pmf: Mapping[tuple, Fraction]

    def __post_init__(self):
        cleaned: dict[tuple, Fraction] = {}
        for (a, b), mass in self.pmf.items():
            mass = as_fraction(mass)
            if mass < 0:
                raise ModelError(f"negative mass at {(a, b)}")
            if mass == 0:
                continue
            self.a_alphabet.index(a)
            self.b_alphabet.index(b)
            cleaned[(a, b)] = cleaned.get((a, b), ZERO) + mass
        if not cleaned:
            raise ModelError("joint pair has empty support")
        total = sum(cleaned.values(), start=ZERO)
        if total != ONE:
            raise ModelError(f"joint masses sum to {total}, not 1")
        ordered = dict(
            sorted(
                cleaned.items(),
                key=lambda kv: (self.a_alphabet.index(kv[0][0]), self.b_alphabet.index(kv[0][1])),
            )
        )
        object.__setattr__(self, "pmf", ordered)

    def mass(self, a, b) -> Fraction:
        return self.pmf.get((a, b), ZERO)

    def a_marginal(self) -> Distribution:
        acc: dict = {}
        for (a, _b), m in self.pmf.items():
            acc[a] = acc.get(a, ZERO) + m
        return Distribution.from_pairs((a, acc[a]) for a in self.a_alphabet if a in acc)

    def b_marginal(self) -> Distribution:
        acc: dict = {}
        for (_a, b), m in self.pmf.items():
            acc[b] = acc.get(b, ZERO) + m
        return Distribution.from_pairs((b, acc[b]) for b in self.b_alphabet if b in acc)

    def conditional_b_given_a(self, a) -> Distribution:
        rows = {b: m for (a2, b), m in self.pmf.items() if a2 == a}
        total = sum(rows.values(), start=ZERO)
        if total == 0:
            raise DomainError(f"conditioning event A={a!r} has zero mass")
        return Distribution.from_pairs(
            (b, rows[b] / total) for b in self.b_alphabet if b in rows
        )

    def swapped(self) -> "JointPair":
        return JointPair(
            self.b_alphabet,
            self.a_alphabet,
            {(b, a): m for (a, b), m in self.pmf.items()},
        )


# ---------------------------------------------------------------------------
# Variable selectors
# ---------------------------------------------------------------------------

_BIT_RE = re.compile(r"^y(\d+)b(\d+)$")
_FILE_RE = re.compile(r"^y(\d+)$")


def _atom_extractor(model: JointModel, atom) -> tuple[Callable, Callable]:
    """Returns (value_fn, sort_key_fn) for one selector atom."""
    if isinstance(atom, str):
        text = atom.strip().lower()
        if text == "x":
            return (lambda x, ys: x), (lambda v: model.x_alphabet.index(v))
        m = _BIT_RE.match(text)
        if m:
            n, j = int(m.group(1)), int(m.group(2))
            if not 1 <= n <= model.file_count:
                raise UsageError(f"file index {n} outside 1..{model.file_count}")
            if not 1 <= j <= model.file_bits:
                raise UsageError(f"bit index {j} outside 1..{model.file_bits}")
            shift = model.file_bits - j
            return (lambda x, ys: (ys[n - 1] >> shift) & 1), (lambda v: v)
        m = _FILE_RE.match(text)
        if m:
            atom = int(m.group(1))
        else:
            raise UsageError(f"unrecognized selector {atom!r}")
    if isinstance(atom, int):
        if not 1 <= atom <= model.file_count:
            raise UsageError(f"file index {atom} outside 1..{model.file_count}")
        n = atom
        return (lambda x, ys: ys[n - 1]), (lambda v: v)
    raise UsageError(f"unrecognized selector {atom!r}")


def _resolve_selector(model: JointModel, which) -> tuple[Callable, Callable]:
    """Compile a selector into (value_fn, sort_key_fn) over support points."""
    if isinstance(which, (str, int)):
        return _atom_extractor(model, which)
    atoms = list(which)
    if not atoms:
        raise UsageError("empty selector")
    parts = [_atom_extractor(model, a) for a in atoms]
    value_fn = lambda x, ys: tuple(p[0](x, ys) for p in parts)  # noqa: E731
    key_fn = lambda v: tuple(p[1](c) for p, c in zip(parts, v))  # noqa: E731
    return value_fn, key_fn


def pushforward(model: JointModel, fn: Callable, sort_key: Callable = None) -> Distribution:
    """Distribution of fn(x, y_tuple) under the model, support sorted."""
    acc: dict = {}
    for (x, ys), mass in model.support():
        v = fn(x, ys)
        acc[v] = acc.get(v, ZERO) + mass
    order = sorted(acc, key=sort_key) if sort_key else sorted(acc)
    return Distribution.from_pairs((v, acc[v]) for v in order)


def marginal(model: JointModel, which) -> Distribution:
    """Exact marginal of the selected variable(s)."""
    value_fn, key_fn = _resolve_selector(model, which)
    return pushforward(model, value_fn, key_fn)


def conditional(model: JointModel, target, given: Mapping) -> Distribution:
    """Exact conditional pmf of `target` given a selector->value assignment.

    A zero-mass conditioning event is an error, never a silent renormalize.
    """
    if not given:
        raise UsageError("empty conditioning assignment")
    value_fn, key_fn = _resolve_selector(model, target)
    constraints = [(_resolve_selector(model, sel)[0], want) for sel, want in given.items()]
    acc: dict = {}
    event_mass = ZERO
    for (x, ys), mass in model.support():
        if all(fn(x, ys) == want for fn, want in constraints):
            event_mass += mass
            v = value_fn(x, ys)
            acc[v] = acc.get(v, ZERO) + mass
    if event_mass == 0:
        raise DomainError(f"conditioning event {dict(given)!r} has zero probability")
    return Distribution.from_pairs((v, acc[v] / event_mass) for v in sorted(acc, key=key_fn))


def joint_pair(model: JointModel, a_selector, b_selector) -> JointPair:
    """Exact joint of two selected variables."""
    a_fn, a_key = _resolve_selector(model, a_selector)
    b_fn, b_key = _resolve_selector(model, b_selector)
    acc: dict = {}
    for (x, ys), mass in model.support():
        cell = (a_fn(x, ys), b_fn(x, ys))
        acc[cell] = acc.get(cell, ZERO) + mass
    a_vals = sorted({a for a, _ in acc}, key=a_key)
    b_vals = sorted({b for _, b in acc}, key=b_key)
    return JointPair(Alphabet(tuple(a_vals)), Alphabet(tuple(b_vals)), acc)


# ---------------------------------------------------------------------------
# Information quantities
# ---------------------------------------------------------------------------


def entropy_bits(d: Distribution) -> float:
    """Shannon entropy in bits; masses exact, logs floating point."""
    total = 0.0
    for _label, q in d.items():
        if q > 0:
            total -= float(q) * _log2_fraction(q)
    return max(total, 0.0)


def conditional_entropy_bits(model: JointModel, target, given) -> float:
    """H(target | given) = sum_g P(g) H(target | given = g)."""
    weights = marginal(model, given)
    total = 0.0
    for g, w in weights.items():
        total += float(w) * entropy_bits(conditional(model, target, {given if isinstance(given, (str, int)) else tuple(given): g}))
    return total


def conditional_entropies_by_value(model: JointModel, target, given) -> dict:
    """Map g -> H(target | given = g); used by max-style bounds."""
    key = given if isinstance(given, (str, int)) else tuple(given)
    weights = marginal(model, given)
    return {g: entropy_bits(conditional(model, target, {key: g})) for g in weights.support()}


def mutual_information_bits(pair: JointPair) -> float:
    """I(A;B) in bits via sum p(a,b) log [p(a,b) / (p(a)p(b))].

    The log ratio is formed as an exact Fraction per cell, so a joint that
    factorizes exactly yields exactly 0.0 (every ratio is 1).
    """
    pa = {a: m for a, m in pair.a_marginal().items()}
    pb = {b: m for b, m in pair.b_marginal().items()}
    total = 0.0
    for (a, b), m in pair.pmf.items():
        ratio = m / (pa[a] * pb[b])
        if ratio != 1:
            total += float(m) * _log2_fraction(ratio)
    return max(total, 0.0)


def exact_independence(pair: JointPair) -> bool:
    """True iff P(a,b) = P(a) P(b) as exact rationals for every cell."""
    pa = {a: m for a, m in pair.a_marginal().items()}
    pb = {b: m for b, m in pair.b_marginal().items()}
    for a in pa:
        for b in pb:
            if pair.mass(a, b) != pa[a] * pb[b]:
                return False
    return True
