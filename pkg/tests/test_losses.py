"""Tests for surrogate losses, their gradients, and zero-one risk."""

import math

import numpy as np
import pytest

from bayescheck.consistency import closed_form_minimizer, nll_realizable_minimizer
from bayescheck.distributions import Distribution, entropy, load_fixture, marginals
from bayescheck.errors import InvalidOutput, SpaceMismatch, WrongLossKind, WrongSpace
from bayescheck.losses import (
    LossEval,
    LossKind,
    ZeroOneRisk,
    bayes_zero_one_risk,
    check_loss_space,
    empirical_surrogate_risk,
    loss,
    normalizer,
    normalizer_grad,
    part_groups,
    surrogate_risk,
    surrogate_risk_value,
    zero_one_risk,
)
from bayescheck.structures import (
    OutputSpace,
    OutputVector,
    SpaceKind,
    bio_sequence,
    dep_tree,
    enumerate_outputs,
    part_index,
)

BIO2 = OutputSpace(SpaceKind.BIO, 2)
BIO3 = OutputSpace(SpaceKind.BIO, 3)
DEP2 = OutputSpace(SpaceKind.DEP_MULTI, 2)
SINGLE3 = OutputSpace(SpaceKind.DEP_SINGLE, 3)

ALL_KINDS = (LossKind.NLL, LossKind.ONE_VS_ALL, LossKind.SEP_BIO, LossKind.SEP_DEP)


def kinds_for(space):
    out = [LossKind.NLL, LossKind.ONE_VS_ALL]
    out.append(LossKind.SEP_BIO if space.kind == SpaceKind.BIO else LossKind.SEP_DEP)
    return out


def uniform(space):
    outputs = enumerate_outputs(space)
    p = 1.0 / len(outputs)
    return Distribution(space, outputs, tuple(p for _ in outputs))


def grad_check(value_fn, grad, w, h=1e-5, rel=1e-6):
    for i in range(len(w)):
        probe = np.array(w, dtype=float)
        probe[i] = w[i] + h
        up = value_fn(probe)
        probe[i] = w[i] - h
        down = value_fn(probe)
        numeric = (up - down) / (2.0 * h)
        assert abs(numeric - grad[i]) <= rel * max(1.0, abs(grad[i])), (
            f"coordinate {i}: numeric {numeric}, analytic {grad[i]}"
        )


# ---------------------------------------------------------------------------
# kinds and applicability


def test_loss_kind_values_and_separability():
    assert [k.value for k in ALL_KINDS] == ["nll", "one-vs-all", "sep-bio", "sep-dep"]
    assert not LossKind.NLL.is_separable
    assert not LossKind.ONE_VS_ALL.is_separable
    assert LossKind.SEP_BIO.is_separable
    assert LossKind.SEP_DEP.is_separable


def test_check_loss_space():
    check_loss_space(LossKind.NLL, BIO2)
    check_loss_space(LossKind.ONE_VS_ALL, DEP2)
    check_loss_space(LossKind.SEP_BIO, BIO2)
    check_loss_space(LossKind.SEP_DEP, DEP2)
    check_loss_space(LossKind.SEP_DEP, SINGLE3)
    with pytest.raises(WrongLossKind):
        check_loss_space(LossKind.SEP_BIO, DEP2)
    with pytest.raises(WrongLossKind):
        check_loss_space(LossKind.SEP_DEP, BIO2)
    # the specific error is catchable as the generic space error
    with pytest.raises(WrongSpace):
        check_loss_space(LossKind.SEP_BIO, SINGLE3)


def test_part_groups_cover_each_output_once():
    for space in (BIO2, BIO3, DEP2, SINGLE3):
        groups = part_groups(space)
        flat = [i for g in groups for i in g]
        assert sorted(flat) == list(range(space.num_parts))
        for y in enumerate_outputs(space):
            chosen = set(y.indices)
            for g in groups:
                assert len(chosen.intersection(g)) == 1


def test_part_groups_bio2_and_dep2_layout():
    assert part_groups(BIO2) == [[0, 1], [2, 3, 4]]
    assert part_groups(DEP2) == [
        [part_index(DEP2, (0, 1)), part_index(DEP2, (2, 1))],
        [part_index(DEP2, (0, 2)), part_index(DEP2, (1, 2))],
    ]


# ---------------------------------------------------------------------------
# hand-checked loss values at simple score vectors


def test_nll_loss_zero_scores():
    y = bio_sequence(BIO2, "BB")
    res = loss(LossKind.NLL, BIO2, np.zeros(5), y)
    assert isinstance(res, LossEval)
    assert math.isclose(res.value, math.log(5), rel_tol=0, abs_tol=1e-12)


def test_one_vs_all_loss_zero_scores():
    y = bio_sequence(BIO2, "BB")
    res = loss(LossKind.ONE_VS_ALL, BIO2, np.zeros(5), y)
    assert math.isclose(res.value, 5 * math.log(2), rel_tol=0, abs_tol=1e-12)


def test_sep_bio_loss_zero_scores():
    y = bio_sequence(BIO2, "OO")
    res = loss(LossKind.SEP_BIO, BIO2, np.zeros(5), y)
    assert math.isclose(res.value, math.log(2) + math.log(3), rel_tol=0, abs_tol=1e-12)


def test_sep_dep_loss_general_vector():
    # parts in order (0,1), (0,2), (1,2), (2,1)
    a, b, c, d = 0.3, -0.7, 1.1, 0.4
    w = np.array([a, b, c, d])
    chain = dep_tree(DEP2, [(0, 1), (1, 2)])
    expected_n = math.log(math.exp(a) + math.exp(d)) + math.log(
        math.exp(b) + math.exp(c)
    )
    res = loss(LossKind.SEP_DEP, DEP2, w, chain)
    assert math.isclose(res.value, -(a + c) + expected_n, rel_tol=0, abs_tol=1e-12)


def test_loss_shifts_linearly_in_observed_score():
    w = np.array([0.5, -0.25, 1.0, 0.75])
    flat = dep_tree(DEP2, [(0, 1), (0, 2)])
    reverse = dep_tree(DEP2, [(0, 2), (2, 1)])
    for kind in (LossKind.NLL, LossKind.ONE_VS_ALL, LossKind.SEP_DEP):
        diff = loss(kind, DEP2, w, flat).value - loss(kind, DEP2, w, reverse).value
        assert math.isclose(diff, (w[1] + w[3]) - (w[0] + w[1]), rel_tol=0, abs_tol=1e-12)


def test_normalizer_matches_loss_at_zero_score_output():
    # nll normalizer is the log partition; fast and bruteforce agree
    rng = np.random.default_rng(11)
    for space in (BIO3, DEP2, SINGLE3):
        w = rng.normal(0.0, 1.5, space.num_parts)
        for kind in kinds_for(space):
            fast = normalizer(kind, space, w)
            brute = normalizer(kind, space, w, algorithm="bruteforce")
            assert math.isclose(fast, brute, rel_tol=1e-10, abs_tol=1e-10)


def test_separable_loss_is_sum_of_group_losses():
    rng = np.random.default_rng(13)
    for space, kind in ((BIO3, LossKind.SEP_BIO), (SINGLE3, LossKind.SEP_DEP)):
        w = rng.normal(0.0, 2.0, space.num_parts)
        y = enumerate_outputs(space)[4]
        res = loss(kind, space, w, y)
        total = 0.0
        for group in part_groups(space):
            (picked,) = set(y.indices).intersection(group)
            block = [w[i] for i in group]
            total += -w[picked] + math.log(sum(math.exp(x) for x in block))
        assert math.isclose(res.value, total, rel_tol=0, abs_tol=1e-10)


# ---------------------------------------------------------------------------
# gradients


@pytest.mark.parametrize("space", [BIO2, BIO3, DEP2, SINGLE3], ids=str)
def test_loss_gradients_match_central_differences(space):
    rng = np.random.default_rng(space.num_parts)
    outputs = enumerate_outputs(space)
    for kind in kinds_for(space):
        for _ in range(3):
            w = rng.normal(0.0, 2.0, space.num_parts)
            y = outputs[int(rng.integers(0, len(outputs)))]
            res = loss(kind, space, w, y)
            grad_check(lambda v: loss(kind, space, v, y).value, res.gradient, w)


@pytest.mark.parametrize("space", [BIO2, DEP2, SINGLE3], ids=str)
def test_risk_gradients_match_central_differences(space):
    rng = np.random.default_rng(space.num_parts + 100)
    dist = uniform(space)
    for kind in kinds_for(space):
        w = rng.normal(0.0, 2.0, space.num_parts)
        res = surrogate_risk(kind, space, dist, w)
        grad_check(
            lambda v: surrogate_risk_value(kind, space, dist, v), res.gradient, w
        )


def test_risk_gradient_is_normalizer_grad_minus_marginals():
    dist = load_fixture("dep-multi2")
    w = np.array([0.2, -0.4, 0.6, 0.1])
    for kind in (LossKind.NLL, LossKind.ONE_VS_ALL, LossKind.SEP_DEP):
        res = surrogate_risk(kind, DEP2, dist, w)
        expected = normalizer_grad(kind, DEP2, w) - marginals(dist)
        assert np.allclose(res.gradient, expected, atol=1e-14)


def test_risk_is_mixture_of_losses():
    dist = load_fixture("ner-bio2")
    w = np.linspace(-1.0, 1.0, 5)
    for kind in (LossKind.NLL, LossKind.ONE_VS_ALL, LossKind.SEP_BIO):
        mixture = sum(
            p * loss(kind, BIO2, w, y).value
            for y, p in zip(dist.outputs, dist.probs)
        )
        res = surrogate_risk(kind, BIO2, dist, w)
        assert math.isclose(res.value, mixture, rel_tol=0, abs_tol=1e-12)
        assert math.isclose(
            res.value, surrogate_risk_value(kind, BIO2, dist, w), rel_tol=0, abs_tol=0
        )


# ---------------------------------------------------------------------------
# minimizers and entropy


def test_nll_risk_at_realizable_minimizer_equals_entropy():
    for name in ("ner-bio2", "dep-multi2"):
        dist = load_fixture(name)
        w, residual = nll_realizable_minimizer(dist)
        assert residual <= 1e-9
        risk = surrogate_risk_value(LossKind.NLL, dist.space, dist, w)
        assert math.isclose(risk, entropy(dist), rel_tol=0, abs_tol=1e-10)


def test_nll_entropy_is_a_floor_when_not_realizable():
    # this table is not an arc-factored Boltzmann distribution, so the best
    # achievable nll risk sits strictly above the entropy
    dist = load_fixture("dep-single3")
    w, residual = nll_realizable_minimizer(dist)
    assert residual > 0.1
    risk = surrogate_risk_value(LossKind.NLL, dist.space, dist, w)
    assert risk > entropy(dist) + 1e-6


def test_gradient_vanishes_at_closed_form_minimizer():
    for name, kind in (
        ("ner-bio2", LossKind.SEP_BIO),
        ("dep-multi2", LossKind.SEP_DEP),
        ("dep-single3", LossKind.SEP_DEP),
    ):
        dist = load_fixture(name)
        w = closed_form_minimizer(kind, dist)
        res = surrogate_risk(kind, dist.space, dist, w)
        assert np.linalg.norm(res.gradient) <= 1e-10


def test_nll_gradient_vanishes_at_realizable_minimizer():
    dist = load_fixture("ner-bio2")
    w, _ = nll_realizable_minimizer(dist)
    res = surrogate_risk(LossKind.NLL, BIO2, dist, w)
    assert np.linalg.norm(res.gradient) <= 1e-9


def test_convexity_along_segments():
    rng = np.random.default_rng(99)
    for space in (BIO2, DEP2):
        dist = uniform(space)
        for kind in kinds_for(space):
            w1 = rng.normal(0.0, 2.0, space.num_parts)
            w2 = rng.normal(0.0, 2.0, space.num_parts)
            for t in (0.25, 0.5, 0.75):
                mid = surrogate_risk_value(kind, space, dist, t * w1 + (1 - t) * w2)
                ends = t * surrogate_risk_value(
                    kind, space, dist, w1
                ) + (1 - t) * surrogate_risk_value(kind, space, dist, w2)
                assert mid <= ends + 1e-9


# ---------------------------------------------------------------------------
# empirical risk


def test_empirical_risk_within_three_sigma():
    dist = load_fixture("dep-multi2")
    w = np.array([0.3, -0.2, 0.8, 0.0])
    kind = LossKind.SEP_DEP
    count = 20000
    exact = surrogate_risk_value(kind, DEP2, dist, w)
    values = [loss(kind, DEP2, w, y).value for y in dist.outputs]
    second = sum(p * v * v for p, v in zip(dist.probs, values))
    sigma = math.sqrt(max(second - exact * exact, 0.0) / count)
    est = empirical_surrogate_risk(kind, DEP2, dist, w, count=count, seed=3)
    assert abs(est - exact) <= 3.0 * sigma


# ---------------------------------------------------------------------------
# zero-one risk


def test_zero_one_risk_optimal_vector():
    dist = load_fixture("dep-multi2")
    w = np.zeros(4)
    w[part_index(DEP2, (1, 2))] = 1.0  # makes the chain the unique argmax
    res = zero_one_risk(DEP2, dist, w)
    assert isinstance(res, ZeroOneRisk)
    assert math.isclose(res.value, 0.6, rel_tol=0, abs_tol=1e-15)
    assert math.isclose(res.bayes, 0.6, rel_tol=0, abs_tol=1e-15)
    assert res.is_optimal


def test_zero_one_risk_suboptimal_vector():
    dist = load_fixture("dep-multi2")
    w = np.zeros(4)
    w[part_index(DEP2, (0, 1))] = 1.0
    w[part_index(DEP2, (0, 2))] = 1.0  # the flat tree wins but has mass 0.3
    res = zero_one_risk(DEP2, dist, w)
    assert math.isclose(res.value, 0.7, rel_tol=0, abs_tol=1e-15)
    assert math.isclose(res.bayes, 0.6, rel_tol=0, abs_tol=1e-15)
    assert not res.is_optimal


def test_zero_one_risk_counts_whole_argmax_set():
    dist = load_fixture("dep-multi2")
    res = zero_one_risk(DEP2, dist, np.zeros(4))
    # all three trees tie, so every draw is scored correct
    assert res.value == 0.0
    assert math.isclose(res.bayes, 0.6, rel_tol=0, abs_tol=1e-15)


def test_bayes_zero_one_risk():
    assert math.isclose(
        bayes_zero_one_risk(load_fixture("ner-bio2")), 0.7, rel_tol=0, abs_tol=1e-15
    )
    assert math.isclose(
        bayes_zero_one_risk(load_fixture("dep-single3")), 0.7, rel_tol=0, abs_tol=1e-15
    )


# ---------------------------------------------------------------------------
# error cases


def test_wrong_space_rejected_everywhere():
    y_bio = bio_sequence(BIO2, "BB")
    with pytest.raises(SpaceMismatch):
        loss(LossKind.NLL, DEP2, np.zeros(4), y_bio)
    dist = load_fixture("ner-bio2")
    with pytest.raises(SpaceMismatch):
        surrogate_risk(LossKind.NLL, DEP2, dist, np.zeros(4))
    with pytest.raises(SpaceMismatch):
        surrogate_risk_value(LossKind.NLL, DEP2, dist, np.zeros(4))
    with pytest.raises(SpaceMismatch):
        zero_one_risk(DEP2, dist, np.zeros(4))


def test_invalid_output_rejected():
    bad = OutputVector(
        DEP2, (part_index(DEP2, (1, 2)), part_index(DEP2, (2, 1)))
    )
    with pytest.raises(InvalidOutput):
        loss(LossKind.NLL, DEP2, np.zeros(4), bad)


def test_wrong_loss_kind_rejected_in_loss_paths():
    y = bio_sequence(BIO2, "BB")
    with pytest.raises(WrongLossKind):
        loss(LossKind.SEP_DEP, BIO2, np.zeros(5), y)
    with pytest.raises(WrongLossKind):
        normalizer(LossKind.SEP_BIO, DEP2, np.zeros(4))
    dist = load_fixture("dep-multi2")
    with pytest.raises(WrongLossKind):
        surrogate_risk(LossKind.SEP_BIO, DEP2, dist, np.zeros(4))
