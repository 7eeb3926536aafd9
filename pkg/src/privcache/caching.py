"""Subfile placement, XOR multicast delivery, and user-side reconstruction.

Layout conventions (fixed once, used for every golden test):
    - users are 1..K, files are 1..N, demands are 1-based file indices;
    - a file splits into C(K, p) equal subfiles, p = M*K/N, indexed by the
      p-subsets of [K] in lexicographic order over sorted member tuples;
    - within a file the subfile in canonical position i holds bit slice i of
      the big-endian F-bit value (position 0 = most significant bits);
    - delivery blocks are indexed by the (p+1)-subsets of [K], same order.

Cache size M is kept as an exact Fraction: the admissible grid is
M in {N/K, 2N/K, ..., N}, whose members need not be integers. Values of M
off that grid are rejected (no memory sharing here).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Mapping, NamedTuple, Sequence

from .distcore import Alphabet, JointModel, JointPair, as_fraction
from .errors import ConfigError, ProtocolError, UsageError

__all__ = [
    "SystemParams",
    "SubfileId",
    "CacheLayout",
    "DeliveryPayload",
    "subsets_of_size",
    "split_file",
    "assemble_file",
    "place",
    "deliver",
    "decode_demand",
    "payload_bits",
    "payload_alphabet_size",
    "payload_distribution",
    "validate_demands",
    "all_demand_vectors",
]


@lru_cache(maxsize=None)
def subsets_of_size(k: int, size: int) -> tuple:
    """All `size`-subsets of {1..k} as sorted tuples, lexicographic order."""
    return tuple(combinations(range(1, k + 1), size))


@dataclass(frozen=True)
class SystemParams:
    """System dimensions: N files of F bits, K users, cache size M files,
    shared key of size T."""

    files: int
    users: int
    file_bits: int
    cache_files: Fraction
    key_size: int

    def __post_init__(self):
        object.__setattr__(self, "cache_files", as_fraction(self.cache_files))
        n, k, f, m, t = (
            self.files,
            self.users,
            self.file_bits,
            self.cache_files,
            self.key_size,
        )
        if k < 1 or f < 1 or t < 1:
            raise ConfigError("users, file_bits, and key_size must be positive")
        if n < k:
            raise ConfigError(
                f"N={n} < K={k} is not supported; this scheme requires at least as many files as users"
            )
        p = m * k / n
        if p.denominator != 1 or not 1 <= p <= k:
            grid = ", ".join(str(Fraction(i * n, k)) for i in range(1, k + 1))
            raise ConfigError(f"cache size M={m} is off the admissible grid {{{grid}}}")
        if f % comb(k, int(p)) != 0:
            raise ConfigError(
                f"file_bits={f} is not divisible by C(K,p)={comb(k, int(p))}, "
                "so subfiles would not have integer width"
            )

    @property
    def replication(self) -> int:
        """p = M*K/N: how many users cache each subfile."""
        return int(self.cache_files * self.users / self.files)

    @property
    def subfile_bits(self) -> int:
        return self.file_bits // comb(self.users, self.replication)

    @property
    def omegas(self) -> tuple:
        """Canonical p-subsets indexing subfiles."""
        return subsets_of_size(self.users, self.replication)

    @property
    def gammas(self) -> tuple:
        """Canonical (p+1)-subsets indexing delivery blocks; empty if p = K."""
        return subsets_of_size(self.users, self.replication + 1)


class SubfileId(NamedTuple):
    file: int
    omega: tuple


@dataclass(frozen=True)
class CacheLayout:
    """Per-user cache contents after placement: user -> {SubfileId: bits}."""

    params: SystemParams
    contents: Mapping[int, Mapping[SubfileId, int]]

    def stored_bits(self, user: int) -> int:
        return len(self.contents[user]) * self.params.subfile_bits


@dataclass(frozen=True)
class DeliveryPayload:
    """The unencrypted multicast response: one XOR block per (p+1)-subset."""

    params: SystemParams
    demands: tuple
    blocks: tuple

    @property
    def block_bits(self) -> int:
        return self.params.subfile_bits

    @property
    def total_bits(self) -> int:
        return len(self.blocks) * self.block_bits

    def value(self) -> tuple:
        """The payload as a hashable symbol (the tuple of block values)."""
        return self.blocks


def validate_demands(d: Sequence[int], params: SystemParams) -> tuple:
    d = tuple(d)
    if len(d) != params.users:
        raise UsageError(f"demand vector has {len(d)} entries, expected {params.users}")
    for entry in d:
        if not isinstance(entry, int) or not 1 <= entry <= params.files:
            raise UsageError(f"demand {entry!r} outside 1..{params.files}")
    return d


def all_demand_vectors(params: SystemParams) -> tuple:
    from itertools import product

    return tuple(product(range(1, params.files + 1), repeat=params.users))


def split_file(y: int, params: SystemParams) -> dict:
    """Split an F-bit value into {omega: subfile bits}, canonical order."""
    f = params.file_bits
    if not 0 <= y < (1 << f):
        raise UsageError(f"file value {y} does not fit in {f} bits")
    width = params.subfile_bits
    mask = (1 << width) - 1
    return {
        omega: (y >> (f - (i + 1) * width)) & mask
        for i, omega in enumerate(params.omegas)
    }


def assemble_file(parts: Mapping[tuple, int], params: SystemParams) -> int:
    """Inverse of split_file; requires every canonical omega present."""
    f = params.file_bits
    width = params.subfile_bits
    y = 0
    for i, omega in enumerate(params.omegas):
        if omega not in parts:
            raise ProtocolError(f"missing subfile for subset {omega}")
        y |= parts[omega] << (f - (i + 1) * width)
    return y


def place(ys: Sequence[int], params: SystemParams) -> CacheLayout:
    """Placement: user k stores subfile (n, omega) iff k is in omega.

    Fills each cache with exactly M*F bits (the memory constraint is met
    with equality).
    """
    if len(ys) != params.files:
        raise UsageError(f"expected {params.files} file values, got {len(ys)}")
    contents: dict[int, dict[SubfileId, int]] = {k: {} for k in range(1, params.users + 1)}
    for n, y in enumerate(ys, start=1):
        for omega, bits in split_file(y, params).items():
            for k in omega:
                contents[k][SubfileId(n, omega)] = bits
    return CacheLayout(params, contents)


def deliver(ys: Sequence[int], d: Sequence[int], params: SystemParams) -> DeliveryPayload:
    """Delivery: block for subset gamma is the XOR over j in gamma of the
    subfile of file d_j indexed by gamma minus {j} (the piece user j lacks)."""
    d = validate_demands(d, params)
    if len(ys) != params.files:
        raise UsageError(f"expected {params.files} file values, got {len(ys)}")
    split = [split_file(y, params) for y in ys]
    blocks = []
    for gamma in params.gammas:
        acc = 0
        for j in gamma:
            omega = tuple(u for u in gamma if u != j)
            acc ^= split[d[j - 1] - 1][omega]
        blocks.append(acc)
    return DeliveryPayload(params, d, tuple(blocks))


def decode_demand(
    user: int,
    payload: DeliveryPayload,
    cache: Mapping[SubfileId, int],
    d: Sequence[int],
    params: SystemParams,
) -> int:
    """Reconstruct file d_user from the payload and the user's own cache.

    For every block whose subset contains the user, XOR out the cached
    subfiles of the other members to expose the missing subfile; cached
    subfiles of the demanded file cover the rest.
    """
    d = validate_demands(d, params)
    if payload.params != params or len(payload.blocks) != len(params.gammas):
        raise ProtocolError("payload does not match system parameters")
    mask = (1 << params.subfile_bits) - 1
    want = d[user - 1]
    parts: dict[tuple, int] = {}
    for omega in params.omegas:
        if user in omega:
            sub = cache.get(SubfileId(want, omega))
            if sub is None:
                raise ProtocolError(f"cache of user {user} lacks subfile {(want, omega)}")
            parts[omega] = sub
    for gamma, block in zip(params.gammas, payload.blocks):
        if user not in gamma:
            continue
        if not 0 <= block <= mask:
            raise ProtocolError(f"block value {block} exceeds subfile width")
        acc = block
        for j in gamma:
            if j == user:
                continue
            omega_j = tuple(u for u in gamma if u != j)
            sub = cache.get(SubfileId(d[j - 1], omega_j))
            if sub is None:
                raise ProtocolError(f"cache of user {user} lacks subfile {(d[j - 1], omega_j)}")
            acc ^= sub
        parts[tuple(u for u in gamma if u != user)] = acc
    return assemble_file(parts, params)


def payload_bits(params: SystemParams) -> int:
    """Total payload width: C(K, p+1) blocks of F / C(K, p) bits."""
    return len(params.gammas) * params.subfile_bits


def payload_alphabet_size(params: SystemParams) -> int:
    """Size of the full payload alphabet (all block-value combinations)."""
    return 1 << payload_bits(params)


def payload_distribution(model: JointModel, d: Sequence[int], params: SystemParams) -> JointPair:
    """Exact joint of (X, payload value): the pushforward of the model
    through the delivery map for a fixed demand vector.

    The A-alphabet is the model's full X alphabet (canonical order); the
    B-alphabet is the computed payload support in tuple order.
    """
    if model.file_count != params.files or model.file_bits != params.file_bits:
        raise ConfigError("model dimensions do not match system parameters")
    d = validate_demands(d, params)
    acc: dict[tuple, Fraction] = {}
    for (x, ys), mass in model.support():
        value = deliver(ys, d, params).value()
        key = (x, value)
        acc[key] = acc.get(key, Fraction(0)) + mass
    b_values = sorted({b for (_a, b) in acc})
    return JointPair(model.x_alphabet, Alphabet(tuple(b_values)), acc)
