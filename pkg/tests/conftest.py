"""Shared fixtures: the golden two-user model and randomized generators."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from privcache import Alphabet, JointModel, JointPair, SystemParams

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# Golden model: two 2-bit files, independent, X = the pair of first bits.
Y1_MASSES = {0: Fraction(1, 16), 1: Fraction(7, 16), 2: Fraction(7, 16), 3: Fraction(1, 16)}
Y2_MASSES = {0: Fraction(1, 10), 1: Fraction(2, 5), 2: Fraction(2, 5), 3: Fraction(1, 10)}


def build_example_model() -> JointModel:
    pmf = {}
    for y1, p1 in Y1_MASSES.items():
        for y2, p2 in Y2_MASSES.items():
            x = f"{y1 >> 1}{y2 >> 1}"
            pmf[(x, (y1, y2))] = p1 * p2
    return JointModel(Alphabet(("00", "01", "10", "11")), 2, 2, pmf)


def build_example_params() -> SystemParams:
    return SystemParams(files=2, users=2, file_bits=2, cache_files=1, key_size=4)


@pytest.fixture(scope="session")
def example_model() -> JointModel:
    return build_example_model()


@pytest.fixture(scope="session")
def example_params() -> SystemParams:
    return build_example_params()


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


def random_model(rng: random.Random, max_x: int = 4) -> tuple[JointModel, SystemParams]:
    """Small random instance: N=K=2, F=2, cache size on the admissible grid,
    |X| in 2..max_x, every X label carrying positive mass."""
    n_x = rng.randint(2, max_x)
    labels = tuple(f"x{i}" for i in range(n_x))
    while True:
        weights: dict[tuple, int] = {}
        for x in labels:
            for _ in range(rng.randint(1, 5)):
                ys = (rng.randrange(4), rng.randrange(4))
                key = (x, ys)
                weights[key] = weights.get(key, 0) + rng.randint(1, 9)
        if all(any(k[0] == x for k in weights) for x in labels):
            break
    total = sum(weights.values())
    pmf = {key: Fraction(w, total) for key, w in weights.items()}
    model = JointModel(Alphabet(labels), 2, 2, pmf)
    cache = rng.choice((1, 2))
    params = SystemParams(files=2, users=2, file_bits=2, cache_files=cache, key_size=n_x)
    return model, params


def random_joint_pair(rng: random.Random, max_x: int = 5, max_target: int = 8,
                      det: bool = False) -> JointPair:
    """Random exact joint of (X, target); det=True makes X a deterministic
    function of the target (every target column owned by one x)."""
    n_c = rng.randint(2, max_target)
    n_x = rng.randint(2, min(max_x, n_c) if det else max_x)
    xs = tuple(f"a{i}" for i in range(n_x))
    cs = tuple(range(n_c))
    weights: dict[tuple, int] = {}
    if det:
        owner = {c: xs[c % n_x] for c in cs}  # onto: every x owns a column
        for c in cs:
            weights[(owner[c], c)] = rng.randint(1, 9)
    else:
        while True:
            weights = {}
            for x in xs:
                for c in rng.sample(cs, rng.randint(1, n_c)):
                    weights[(x, c)] = rng.randint(1, 9)
            if all(any(k[0] == x for k in weights) for x in xs):
                break
    total = sum(weights.values())
    pmf = {key: Fraction(w, total) for key, w in weights.items()}
    a_seen = tuple(x for x in xs if any(k[0] == x for k in weights))
    b_seen = tuple(c for c in cs if any(k[1] == c for k in weights))
    return JointPair(Alphabet(a_seen), Alphabet(b_seen), pmf)
