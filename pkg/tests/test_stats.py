import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import entropy_of_counts, window_counts
from nsrps.errors import DominationError, InsufficientDataError
from nsrps.seqcore import sequence, sequence_from_tokens
from nsrps.sources import MarkovModel, generate
from nsrps.stats import (
    TransitionMatrix,
    ZeroPolicy,
    block_distribution,
    block_entropy,
    conditional_entropy,
    cross_conditional_entropy,
    kl_1block,
    markov1_projection,
    transition_matrix,
)

LN2 = math.log(2)


def _digits(text):
    return sequence([int(c) for c in text], 2)


@pytest.mark.parametrize("text, k, expected", [
    ("0101", 2, {(0, 1): 2, (1, 0): 1}),
    ("0000", 1, {(0,): 4}),
    ("0011", 2, {(0, 0): 1, (0, 1): 1, (1, 1): 1}),
])
def test_block_distribution_examples(text, k, expected):
    dist = block_distribution(_digits(text), k)
    assert dist.as_dict() == expected
    assert dist.total == len(text) - k + 1


def test_block_distribution_too_short():
    with pytest.raises(InsufficientDataError):
        block_distribution(_digits("01"), 3)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=80), st.integers(1, 4))
def test_block_counts_match_brute_force(xs, k):
    if k > len(xs):
        return
    dist = block_distribution(sequence(xs, 4), k)
    assert dist.as_dict() == dict(window_counts(xs, k))
    assert dist.frequencies.sum() == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.integers(0, 2), min_size=3, max_size=80), st.integers(1, 3))
def test_marginal_consistency(xs, k):
    if k + 1 > len(xs):
        return
    seq = sequence(xs, 3)
    upper = block_distribution(seq, k + 1)
    lower = block_distribution(seq, k, windows=len(xs) - k)
    assert upper.marginal().as_dict() == lower.as_dict()


@pytest.mark.parametrize("counts, expected", [
    ("0011", LN2),
    ("0000", 0.0),
])
def test_block_entropy_unigrams(counts, expected):
    assert block_entropy(block_distribution(_digits(counts), 1)) == pytest.approx(expected, abs=1e-15)


def test_block_entropy_uniform_three():
    assert block_entropy(block_distribution(_digits("0011"), 2)) == pytest.approx(math.log(3), abs=1e-15)


@given(st.lists(st.integers(0, 2), min_size=2, max_size=80), st.integers(0, 3))
def test_conditional_entropy_matches_brute_force(xs, n):
    if n + 1 > len(xs):
        return
    w = len(xs) - n
    expected = entropy_of_counts(window_counts(xs, n + 1, w))
    if n:
        expected -= entropy_of_counts(window_counts(xs, n, w))
    assert conditional_entropy(sequence(xs, 3), n) == pytest.approx(expected, abs=1e-12)


def test_conditional_entropy_iid_and_periodic():
    iid = generate(MarkovModel.bernoulli(0.5), 10**6, 1)
    assert conditional_entropy(iid, 1) == pytest.approx(LN2, abs=0.01)
    alt = sequence([0, 1] * 5000, 2)
    assert conditional_entropy(alt, 1) == pytest.approx(0.0, abs=1e-12)
    assert conditional_entropy(alt, 0) == pytest.approx(block_entropy(block_distribution(alt, 1)))


def test_cross_entropy_of_sample_with_its_own_law():
    nu = generate(MarkovModel.flip(0.3), 20000, 2)
    for k in (1, 2):
        own = transition_matrix(nu, k)
        got = cross_conditional_entropy(block_distribution(nu, k + 1), own)
        assert got == pytest.approx(conditional_entropy(nu, k), abs=1e-12)


def test_cross_entropy_against_exact_bernoulli():
    mu = sequence([0, 1] * 10, 2)
    dist = block_distribution(mu, 1)
    model = MarkovModel.bernoulli(0.25).as_transition_matrix()
    expected = -0.5 * math.log(0.25) - 0.5 * math.log(0.75)
    assert expected == pytest.approx(0.836988, abs=1e-6)
    assert cross_conditional_entropy(dist, model) == pytest.approx(expected, abs=1e-12)


def test_domination_failure_is_strict_by_default_for_exact_models():
    mu = block_distribution(_digits("0101"), 2)
    nu = TransitionMatrix.from_dense([[1.0, 0.0], [0.5, 0.5]])
    with pytest.raises(DominationError) as info:
        cross_conditional_entropy(mu, nu)
    assert info.value.block == (0, 1)
    assert cross_conditional_entropy(mu, nu, "infinity") == math.inf


def test_epsilon_policy_smooths_only_offending_rows():
    mu = _digits("0110")
    nu = _digits("00011")  # contexts: 0 -> {0:2, 1:1}; 1 -> {1:1}
    model = markov1_projection(nu)
    got = cross_conditional_entropy(block_distribution(mu, 2), model, "epsilon(1)")
    # mu pairs 01, 11, 10; row 1 has a zero at 10 and gets (c+1)/(1+2c)
    q01, q11, q10 = 1 / 3, 2 / 3, 1 / 3
    expected = -(math.log(q01) + math.log(q11) + math.log(q10)) / 3
    assert got == pytest.approx(expected, abs=1e-12)
    with pytest.raises(DominationError):
        cross_conditional_entropy(block_distribution(mu, 2), model, "strict")


def test_zero_policy_parsing():
    assert ZeroPolicy.parse("epsilon") == ZeroPolicy("epsilon", 1.0)
    assert ZeroPolicy.parse("epsilon(0.5)").c == 0.5
    assert ZeroPolicy.parse("epsilon:2").c == 2.0
    assert str(ZeroPolicy.parse("strict")) == "strict"
    with pytest.raises(ValueError):
        ZeroPolicy.parse("bogus")


def test_markov1_projection_alternating():
    P = markov1_projection(sequence([0, 1] * 50, 2))
    assert P.probs[0].tolist() == [0.0, 1.0]
    assert P.probs[1].tolist() == [1.0, 0.0]
    assert not P.flagged.any()


def test_markov1_projection_iid_rows_close_to_unigram():
    seq = generate(MarkovModel.iid([0.2, 0.3, 0.5]), 10**6, 4)
    P = markov1_projection(seq)
    for row in P.probs:
        np.testing.assert_allclose(row, [0.2, 0.3, 0.5], atol=0.005)
    np.testing.assert_allclose(P.probs.sum(axis=1), 1.0, atol=1e-12)


def test_markov1_projection_dangling_row():
    P = markov1_projection(_digits("01"))
    assert P.probs[0].tolist() == [0.0, 1.0]
    assert P.flagged.tolist() == [False, True]
    assert P.probs[1].tolist() == [0.5, 0.5]
    assert P.marginal[1] == 0.0


def test_kl_identical_laws_is_zero():
    P = markov1_projection(generate(MarkovModel.flip(0.2), 1000, 1))
    assert kl_1block(P, P) == 0.0


def test_kl_bernoulli_as_order_one():
    P = TransitionMatrix.from_dense([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.5])
    Q = TransitionMatrix.from_dense([[0.25, 0.75], [0.25, 0.75]], [0.25, 0.75])
    expected = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
    assert expected == pytest.approx(0.143841, abs=1e-6)
    assert kl_1block(P, Q) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_kl_equals_cross_minus_entropy_from_same_counts(seed):
    mu = generate(MarkovModel.random(2, 3, seed), 5000, seed)
    nu = generate(MarkovModel.random(1, 3, seed + 100), 3000, seed)
    P, Q = markov1_projection(mu), markov1_projection(nu)
    cross = cross_conditional_entropy(block_distribution(mu, 2), Q, "epsilon")
    assert kl_1block(P, Q, "epsilon") == pytest.approx(cross - conditional_entropy(mu, 1), abs=1e-10)


def test_dump_formats():
    seq = sequence_from_tokens("a b a b b")
    dist = block_distribution(seq, 2)
    assert dist.to_tsv(seq.alphabet.labels).splitlines() == ["block\tcount", "a b\t2", "b a\t1", "b b\t1"]
    P = markov1_projection(seq)
    lines = P.to_tsv(seq.alphabet.labels).splitlines()
    assert lines[0] == "context\tsymbol\tprobability"
    assert "a\tb\t1" in lines
