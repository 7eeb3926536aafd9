"""Two-part private codes: pad-encrypted private index plus a prefix-free
representation code.

A codeword is the fixed-width big-endian encoding of the padded index
x~ = (x + w) mod |X| (width ceil(log2 |X|)), followed by a Huffman codeword
for the representation symbol U. The fixed-width head keeps the overall
code prefix-free, and because the pad makes x~ uniform and independent of
everything else, the adversary's view carries exactly the leakage of U.

Huffman ties are broken deterministically: among minimal masses the lowest
canonical order is merged first, the first node popped becomes the left
(bit 0) branch, and a merged node inherits the smaller constituent order.
A single-symbol support encodes to the empty string, so a constant U costs
zero bits on the wire.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .caching import DeliveryPayload, SystemParams, decode_demand, deliver, payload_distribution
from .distcore import Distribution, JointModel, ceil_log2
from .errors import DomainError, ModelError, ProtocolError
from .frl import invert_phi, sample_u

__all__ = [
    "SharedKey",
    "PrefixCodebook",
    "Codeword",
    "otp_encode",
    "otp_decode",
    "build_prefix_code",
    "pack_index",
    "unpack_index",
    "encode",
    "encode_with_u",
    "decode_user",
    "expected_length",
]


@dataclass(frozen=True)
class SharedKey:
    """Shared pad value w in {0, ..., size-1}; size T matches |X| here."""

    value: int
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise DomainError("key size must be positive")
        if not 0 <= self.value < self.size:
            raise DomainError(f"key value {self.value} outside 0..{self.size - 1}")


def otp_encode(x_index: int, key: SharedKey) -> int:
    """Pad the private index: (x + w) mod T."""
    if not 0 <= x_index < key.size:
        raise DomainError(f"index {x_index} outside 0..{key.size - 1}")
    return (x_index + key.value) % key.size


def otp_decode(padded_index: int, key: SharedKey) -> int:
    """Exact inverse of otp_encode: (x~ + T - w) mod T."""
    if not 0 <= padded_index < key.size:
        raise DomainError(f"index {padded_index} outside 0..{key.size - 1}")
    return (padded_index + key.size - key.value) % key.size


@dataclass(frozen=True)
class PrefixCodebook:
    """Prefix-free symbol -> bit-string map plus the reverse decoder."""

    symbols: tuple
    codes: Mapping[object, str]

    def __post_init__(self):
        words = [self.codes[s] for s in self.symbols]
        for i, w in enumerate(words):
            for j, v in enumerate(words):
                if i != j and v.startswith(w):
                    raise ModelError(f"codeword {w!r} is a prefix of {v!r}")
        object.__setattr__(self, "_decode", {self.codes[s]: s for s in self.symbols})

    def length(self, symbol) -> int:
        return len(self.codes[symbol])

    def encode_symbol(self, symbol) -> str:
        try:
            return self.codes[symbol]
        except KeyError:
            raise DomainError(f"symbol {symbol!r} not in codebook") from None

    def decode_symbol(self, bits: str, start: int = 0) -> tuple:
        """Parse one codeword starting at `start`; returns (symbol, end)."""
        if len(self.symbols) == 1:
            return self.symbols[0], start
        lookup = self._decode
        for end in range(start, len(bits) + 1):
            sym = lookup.get(bits[start:end])
            if sym is not None:
                return sym, end
        raise ProtocolError(f"bit stream {bits[start:]!r} matches no codeword")

    def expected_length_bits(self, dist: Distribution) -> Fraction:
        return sum(
            (mass * self.length(sym) for sym, mass in dist.items()),
            start=Fraction(0),
        )

    def kraft_sum(self) -> Fraction:
        return sum(
            (Fraction(1, 2 ** len(self.codes[s])) for s in self.symbols),
            start=Fraction(0),
        )


class _Branch:
    """Internal Huffman node; distinct type so symbols may be any hashable."""

    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left = left
        self.right = right


def build_prefix_code(dist: Distribution) -> PrefixCodebook:
    """Optimal prefix code for an exact distribution (Huffman)."""
    symbols = dist.alphabet.symbols
    if not symbols:
        raise ModelError("cannot code an empty support")
    if len(symbols) == 1:
        return PrefixCodebook(symbols, {symbols[0]: ""})

    # heap entries: (mass, order, id, payload); `id` breaks residual ties so
    # Fractions never compare against node payloads.
    heap = []
    for order, (sym, mass) in enumerate(dist.items()):
        heapq.heappush(heap, (mass, order, order, sym))
    next_id = len(symbols)
    while len(heap) > 1:
        m1, o1, _i1, left = heapq.heappop(heap)
        m2, o2, _i2, right = heapq.heappop(heap)
        heapq.heappush(heap, (m1 + m2, min(o1, o2), next_id, _Branch(left, right)))
        next_id += 1

    codes: dict = {}
    stack = [(heap[0][3], "")]
    while stack:
        node, prefix = stack.pop()
        if isinstance(node, _Branch):
            stack.append((node.left, prefix + "0"))
            stack.append((node.right, prefix + "1"))
        else:
            codes[node] = prefix
    return PrefixCodebook(symbols, codes)


def pack_index(index: int, width: int) -> str:
    if width == 0:
        if index != 0:
            raise ProtocolError(f"index {index} needs a positive width")
        return ""
    if not 0 <= index < (1 << width):
        raise ProtocolError(f"index {index} does not fit in {width} bits")
    return format(index, f"0{width}b")


def unpack_index(bits: str) -> int:
    return int(bits, 2) if bits else 0


@dataclass(frozen=True)
class Codeword:
    """Concatenated wire codeword: fixed-width head then prefix-free tail."""

    bits: str
    part1_len: int

    def __post_init__(self):
        if len(self.bits) < self.part1_len:
            raise ProtocolError("codeword shorter than its fixed-width head")

    @property
    def head(self) -> str:
        return self.bits[: self.part1_len]

    @property
    def tail(self) -> str:
        return self.bits[self.part1_len :]

    def __len__(self) -> int:
        return len(self.bits)


def encode_with_u(x, u, key: SharedKey, channel, codebook: PrefixCodebook) -> Codeword:
    """Assemble the codeword for a known representation symbol."""
    x_index = channel.x_alphabet.index(x)
    if key.size != len(channel.x_alphabet):
        raise ProtocolError(
            f"key size {key.size} does not match |X| = {len(channel.x_alphabet)}"
        )
    width = ceil_log2(key.size)
    head = pack_index(otp_encode(x_index, key), width)
    return Codeword(head + codebook.encode_symbol(u), width)


def encode(x, c, key: SharedKey, channel, codebook: PrefixCodebook, rng) -> Codeword:
    """Encode one realization: pad X, sample U given (x, payload), code both."""
    u = sample_u(channel, x, c, rng)
    return encode_with_u(x, u, key, channel, codebook)


def decode_user(
    user: int,
    codeword: Codeword,
    key: SharedKey,
    channel,
    codebook: PrefixCodebook,
    cache: Mapping,
    d: Sequence[int],
    params: SystemParams,
) -> int:
    """Full user-side chain: unpad X, prefix-decode U, rebuild the payload,
    then reconstruct the demanded file from payload plus cache."""
    width = ceil_log2(key.size)
    if codeword.part1_len != width:
        raise ProtocolError(
            f"codeword head is {codeword.part1_len} bits, expected {width}"
        )
    padded = unpack_index(codeword.head)
    if padded >= key.size:
        raise ProtocolError(f"padded index {padded} outside key range {key.size}")
    x = channel.x_alphabet.symbols[otp_decode(padded, key)]
    u, end = codebook.decode_symbol(codeword.bits, width)
    if end != len(codeword.bits):
        raise ProtocolError("trailing bits after the representation codeword")
    value = invert_phi(channel, x, u)
    payload = DeliveryPayload(params, tuple(d), value)
    return decode_demand(user, payload, cache, d, params)


def expected_length(
    model: JointModel,
    d: Sequence[int],
    params: SystemParams,
    channel,
    codebook: PrefixCodebook,
) -> dict:
    """Exact expected codeword length conditioned on each key value.

    Returns {w: Fraction}; the values coincide for every w because the
    representation part is independent of the pad and the head has fixed
    width, but each entry is computed from its own conditional expectation.
    """
    pair = payload_distribution(model, d, params)
    rows = [
        (x, px, tuple(pair.conditional_b_given_a(x).items()))
        for x, px in pair.a_marginal().items()
    ]
    per_key: dict[int, Fraction] = {}
    for w in range(params.key_size):
        key = SharedKey(w, params.key_size)
        total = Fraction(0)
        for x, px, conditionals in rows:
            for c, pc in conditionals:
                for u, pu in channel.u_support_given(x, c):
                    word = encode_with_u(x, u, key, channel, codebook)
                    total += px * pc * pu * len(word)
        per_key[w] = total
    return per_key
