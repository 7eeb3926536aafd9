"""Exact probability engine: marginals, conditionals, entropies, MI."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from privcache import (
    Alphabet,
    Distribution,
    JointModel,
    JointPair,
    ceil_log2,
    conditional,
    conditional_entropy_bits,
    entropy_bits,
    exact_independence,
    joint_pair,
    marginal,
    mutual_information_bits,
)
from privcache.distcore import conditional_entropies_by_value
from privcache.errors import DomainError, ModelError, UsageError

from conftest import random_model


def test_ceil_log2_exact_at_powers_of_two():
    assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 8, 9, 1 << 40)] == [0, 1, 2, 2, 3, 3, 4, 40]
    with pytest.raises(UsageError):
        ceil_log2(0)


def test_distribution_rejects_bad_masses():
    with pytest.raises(ModelError):
        Distribution(Alphabet((0, 1)), (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(ModelError):
        Distribution(Alphabet((0, 1)), (Fraction(3, 2), Fraction(-1, 2)))


def test_marginal_first_bits(example_model):
    assert dict(marginal(example_model, "y1b1").items()) == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    assert marginal(example_model, "y1b1").mass(1) == Fraction(1, 2)
    assert marginal(example_model, "y2b2").mass(1) == Fraction(1, 2)


def test_marginal_all_variables_is_reindexed_joint(example_model):
    full = marginal(example_model, ("x", 1, 2))
    assert sum(full.masses, start=Fraction(0)) == 1
    for (x, ys), mass in example_model.support():
        assert full.mass((x, ys[0], ys[1])) == mass


def test_marginal_bit_pair_uniform_by_bruteforce(example_model):
    # oracle: sum the 16-point joint directly
    acc = {}
    for (_x, (y1, y2)), mass in example_model.support():
        key = (y1 >> 1, y2 >> 1)
        acc[key] = acc.get(key, Fraction(0)) + mass
    assert acc == {(a, b): Fraction(1, 4) for a in (0, 1) for b in (0, 1)}
    got = marginal(example_model, ("y1b1", "y2b1"))
    assert dict(got.items()) == acc


def test_marginal_rejects_empty_selector(example_model):
    with pytest.raises(UsageError):
        marginal(example_model, ())


def test_conditional_second_bit_given_first(example_model):
    got = conditional(example_model, "y1b2", {"y1b1": 0})
    assert dict(got.items()) == {0: Fraction(1, 8), 1: Fraction(7, 8)}
    got = conditional(example_model, "y2b2", {"y2b1": 0})
    assert dict(got.items()) == {0: Fraction(1, 5), 1: Fraction(4, 5)}


def test_conditional_deterministic_and_zero_mass():
    model = JointModel(
        Alphabet(("a", "b")),
        1,
        1,
        {("a", (0,)): Fraction(1, 2), ("b", (1,)): Fraction(1, 2)},
    )
    point = conditional(model, 1, {"x": "a"})
    assert dict(point.items()) == {0: Fraction(1)}
    with pytest.raises(DomainError):
        conditional(model, 1, {"x": "a", 1: 1})  # x="a" forces y=0


def test_entropy_golden_values():
    assert entropy_bits(Distribution.from_pairs([(i, Fraction(1, 4)) for i in range(4)])) == 2.0
    h18 = entropy_bits(Distribution.from_pairs([(0, Fraction(1, 8)), (1, Fraction(7, 8))]))
    assert abs(4 * h18 - 2.1743) < 5e-4
    h15 = entropy_bits(Distribution.from_pairs([(0, Fraction(1, 5)), (1, Fraction(4, 5))]))
    assert abs(4 * h15 - 2.8877) < 5e-4


def test_uniform_entropy_matches_log2():
    for n in (2, 3, 7, 16, 100):
        d = Distribution.from_pairs([(i, Fraction(1, n)) for i in range(n)])
        assert abs(entropy_bits(d) - math.log2(n)) < 1e-12


def test_conditional_entropy_independent_case(example_model):
    # files independent: H(Y2 | Y1) = H(Y2)
    assert abs(
        conditional_entropy_bits(example_model, 2, 1) - entropy_bits(marginal(example_model, 2))
    ) < 1e-12


def test_conditional_entropy_of_database_given_x(example_model):
    by_x = conditional_entropies_by_value(example_model, (1, 2), "x")
    assert abs(max(by_x.values()) - 1.2655) < 5e-4
    # every x gives the same value in this model
    assert max(by_x.values()) - min(by_x.values()) < 1e-12
    assert abs(conditional_entropy_bits(example_model, (1, 2), "x") - 1.2655) < 5e-4


def test_conditional_entropy_deterministic_target(example_model):
    assert conditional_entropy_bits(example_model, "y1b1", "x") == 0.0


def test_chain_rule_on_random_models():
    rng = random.Random(7)
    for _ in range(25):
        model, _params = random_model(rng)
        pair = joint_pair(model, "x", (1, 2))
        h_joint = entropy_bits(
            Distribution.from_pairs(((a, b), m) for (a, b), m in pair.pmf.items())
        )
        h_a = entropy_bits(pair.a_marginal())
        h_b_given_a = sum(
            float(pa) * entropy_bits(pair.conditional_b_given_a(a))
            for a, pa in pair.a_marginal().items()
        )
        assert abs(h_joint - h_a - h_b_given_a) < 1e-9


def test_marginal_consistency_is_exact():
    rng = random.Random(11)
    for _ in range(25):
        model, _params = random_model(rng)
        target_marginal = {v: m for v, m in marginal(model, 1).items()}
        mixed: dict = {}
        for x, px in marginal(model, "x").items():
            for v, pv in conditional(model, 1, {"x": x}).items():
                mixed[v] = mixed.get(v, Fraction(0)) + px * pv
        assert mixed == target_marginal


def test_mutual_information_product_and_identity():
    product = JointPair(
        Alphabet((0, 1)),
        Alphabet((0, 1)),
        {(a, b): Fraction(1, 4) for a in (0, 1) for b in (0, 1)},
    )
    assert mutual_information_bits(product) == 0.0
    assert exact_independence(product)

    identity = JointPair(
        Alphabet(range(4)),
        Alphabet(range(4)),
        {(i, i): Fraction(1, 4) for i in range(4)},
    )
    assert abs(mutual_information_bits(identity) - 2.0) < 1e-12
    assert not exact_independence(identity)


def test_mutual_information_xor_against_bruteforce(example_model):
    # tabulate the XOR of (second bit of file 1) and (first bit of file 2)
    # over the 16-point joint, then compute I(X; xor) two independent ways
    acc: dict = {}
    for (x, (y1, y2)), mass in example_model.support():
        xor = (y1 & 1) ^ (y2 >> 1)
        acc[(x, xor)] = acc.get((x, xor), Fraction(0)) + mass
    pair = JointPair(example_model.x_alphabet, Alphabet((0, 1)), acc)

    pa: dict = {}
    pb: dict = {}
    for (a, b), m in acc.items():
        pa[a] = pa.get(a, Fraction(0)) + m
        pb[b] = pb.get(b, Fraction(0)) + m
    oracle = sum(
        float(m) * math.log2(float(m / (pa[a] * pb[b]))) for (a, b), m in acc.items()
    )
    assert oracle > 0.1  # the XOR genuinely depends on X here
    assert abs(mutual_information_bits(pair) - oracle) < 1e-12


def test_mutual_information_nonnegative_on_random_models():
    rng = random.Random(13)
    for _ in range(40):
        model, _params = random_model(rng)
        pair = joint_pair(model, "x", 1)
        mi = mutual_information_bits(pair)
        assert mi >= 0.0
        if exact_independence(pair):
            assert mi == 0.0
