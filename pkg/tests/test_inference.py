"""Tests for exact MAP and marginal inference, fast paths against oracles."""

import json
import math

import numpy as np
import pytest

from bayescheck.errors import (
    DimensionMismatch,
    NoFiniteOutput,
    ParseError,
    SpaceMismatch,
)
from bayescheck.inference import (
    forward_backward_bio,
    load_scores,
    map_bruteforce,
    map_inference,
    marginal_inference,
    marginals_bruteforce,
    msa,
    mtt_marginals,
    save_scores,
    score_of,
    scores_from_dict,
    scores_to_dict,
    validate_scores,
    viterbi_bio,
)
from bayescheck.structures import (
    OutputSpace,
    SpaceKind,
    bio_sequence,
    dep_tree,
    enumerate_outputs,
    part_index,
)

BIO2 = OutputSpace(SpaceKind.BIO, 2)
BIO3 = OutputSpace(SpaceKind.BIO, 3)
DEP2 = OutputSpace(SpaceKind.DEP_MULTI, 2)
SINGLE2 = OutputSpace(SpaceKind.DEP_SINGLE, 2)
SINGLE3 = OutputSpace(SpaceKind.DEP_SINGLE, 3)

FAST_SPACES = [
    OutputSpace(SpaceKind.BIO, n) for n in (1, 2, 3, 4, 5, 6)
] + [
    OutputSpace(kind, n)
    for kind in (SpaceKind.DEP_MULTI, SpaceKind.DEP_SINGLE)
    for n in (2, 3, 4)
]


def random_scores(space, rng, scale=2.0):
    return rng.normal(0.0, scale, space.num_parts)


# ---------------------------------------------------------------------------
# score plumbing


def test_validate_scores_shape_and_values():
    w = validate_scores(DEP2, [0.0, 1.0, -math.inf, 2.0])
    assert w.shape == (4,)
    with pytest.raises(DimensionMismatch):
        validate_scores(DEP2, [0.0, 1.0])
    with pytest.raises(ValueError):
        validate_scores(DEP2, [0.0, 1.0, math.inf, 2.0])
    with pytest.raises(ValueError):
        validate_scores(DEP2, [0.0, 1.0, math.nan, 2.0])


def test_score_of_sums_in_index_order():
    w = np.array([0.1, 0.2, 0.4, 0.8])
    chain = dep_tree(DEP2, [(0, 1), (1, 2)])
    assert score_of(DEP2, w, chain) == 0.1 + 0.4
    with pytest.raises(SpaceMismatch):
        score_of(BIO2, [0.0] * 5, chain)


# ---------------------------------------------------------------------------
# hand-checked values


def test_viterbi_zero_scores_breaks_ties_to_first_enumerated():
    res = viterbi_bio(BIO3, np.zeros(BIO3.num_parts))
    assert "".join(t for _, t in res.output.part_ids()) == "BBB"
    assert res.score == 0.0


def test_map_zero_scores_first_enumerated_everywhere():
    for space in FAST_SPACES:
        w = np.zeros(space.num_parts)
        fast = map_inference(space, w, algorithm="fast")
        first = enumerate_outputs(space)[0]
        assert fast.output == first
        assert fast.score == 0.0


def test_log_partition_zero_scores_counts_outputs():
    for space, count in [(BIO2, 5), (BIO3, 13), (DEP2, 3), (SINGLE3, 9)]:
        res = marginal_inference(space, np.zeros(space.num_parts))
        assert math.isclose(res.log_partition, math.log(count), rel_tol=0, abs_tol=1e-10)


def test_forward_backward_zero_scores_bio2():
    res = forward_backward_bio(BIO2, np.zeros(5))
    # outputs BB BI BO OB OO, uniform 1/5 each
    expected = {
        (1, "B"): 3 / 5,
        (1, "O"): 2 / 5,
        (2, "B"): 2 / 5,
        (2, "I"): 1 / 5,
        (2, "O"): 2 / 5,
    }
    for part, value in expected.items():
        assert math.isclose(
            res.marginals[part_index(BIO2, part)], value, rel_tol=0, abs_tol=1e-12
        )


def test_mtt_zero_scores_dep2():
    res = mtt_marginals(DEP2, np.zeros(4))
    expected = {(0, 1): 2 / 3, (0, 2): 2 / 3, (1, 2): 1 / 3, (2, 1): 1 / 3}
    for part, value in expected.items():
        assert math.isclose(
            res.marginals[part_index(DEP2, part)], value, rel_tol=0, abs_tol=1e-12
        )


def test_viterbi_prefers_high_scoring_tag():
    w = np.zeros(5)
    w[part_index(BIO2, (2, "I"))] = 1.0
    res = viterbi_bio(BIO2, w)
    assert res.output == bio_sequence(BIO2, "BI")
    assert res.score == 1.0


def test_msa_picks_best_tree():
    w = np.zeros(4)
    w[part_index(DEP2, (0, 2))] = 2.0
    w[part_index(DEP2, (2, 1))] = 1.5
    res = msa(DEP2, w)
    assert res.output == dep_tree(DEP2, [(0, 2), (2, 1)])
    assert res.score == 3.5


def test_msa_single_root_constraint_binds():
    # both root arcs are very attractive, but only one may be used
    w = np.zeros(4)
    w[part_index(SINGLE2, (0, 1))] = 10.0
    w[part_index(SINGLE2, (0, 2))] = 10.0
    fast = msa(SINGLE2, w)
    brute = map_bruteforce(SINGLE2, w)
    assert fast.output == brute.output
    assert fast.score == brute.score == 10.0
    # the multi-root space happily takes both
    multi = msa(DEP2, w)
    assert multi.output == dep_tree(DEP2, [(0, 1), (0, 2)])
    assert multi.score == 20.0


def test_single_root_marginals_respect_constraint():
    rng = np.random.default_rng(5)
    w = random_scores(SINGLE3, rng)
    res = mtt_marginals(SINGLE3, w)
    root_mass = sum(
        res.marginals[part_index(SINGLE3, (0, m))] for m in range(1, 4)
    )
    assert math.isclose(root_mass, 1.0, rel_tol=0, abs_tol=1e-10)


# ---------------------------------------------------------------------------
# -inf handling


def test_blocked_part_is_avoided_and_has_zero_marginal():
    w = np.zeros(5)
    w[part_index(BIO2, (2, "I"))] = -math.inf
    w[part_index(BIO2, (2, "B"))] = -1.0
    res = viterbi_bio(BIO2, w)
    assert res.output in (bio_sequence(BIO2, "BO"),)
    mres = forward_backward_bio(BIO2, w)
    assert mres.marginals[part_index(BIO2, (2, "I"))] == 0.0
    brute = marginals_bruteforce(BIO2, w)
    assert np.allclose(mres.marginals, brute.marginals, atol=1e-12)


def test_blocked_arc_msa_and_mtt():
    w = np.zeros(4)
    w[part_index(DEP2, (0, 1))] = -math.inf
    fast = msa(DEP2, w)
    brute = map_bruteforce(DEP2, w)
    assert fast.output == brute.output == dep_tree(DEP2, [(0, 2), (2, 1)])
    mres = mtt_marginals(DEP2, w)
    bres = marginals_bruteforce(DEP2, w)
    assert np.allclose(mres.marginals, bres.marginals, atol=1e-10)
    assert mres.marginals[part_index(DEP2, (0, 1))] <= 1e-12


def test_everything_blocked_raises():
    w = np.full(5, -math.inf)
    with pytest.raises(NoFiniteOutput):
        viterbi_bio(BIO2, w)
    with pytest.raises(NoFiniteOutput):
        map_bruteforce(BIO2, w)
    with pytest.raises(NoFiniteOutput):
        forward_backward_bio(BIO2, w)
    with pytest.raises(NoFiniteOutput):
        marginals_bruteforce(BIO2, w)
    # blocking all root arcs starves every tree
    wd = np.zeros(4)
    wd[part_index(DEP2, (0, 1))] = -math.inf
    wd[part_index(DEP2, (0, 2))] = -math.inf
    with pytest.raises(NoFiniteOutput):
        msa(DEP2, wd)
    with pytest.raises(NoFiniteOutput):
        map_bruteforce(DEP2, wd)
    with pytest.raises(NoFiniteOutput):
        mtt_marginals(DEP2, wd)


# ---------------------------------------------------------------------------
# fast path against the enumeration oracle


@pytest.mark.parametrize("space", FAST_SPACES, ids=lambda s: f"{s.kind.value}-{s.n}")
def test_map_fast_matches_bruteforce(space):
    rng = np.random.default_rng(space.num_parts * 1000 + 17)
    for _ in range(20):
        w = random_scores(space, rng)
        fast = map_inference(space, w, algorithm="fast")
        brute = map_inference(space, w, algorithm="bruteforce")
        assert fast.output == brute.output
        assert fast.score == brute.score


@pytest.mark.parametrize("space", FAST_SPACES, ids=lambda s: f"{s.kind.value}-{s.n}")
def test_map_fast_matches_bruteforce_under_heavy_ties(space):
    rng = np.random.default_rng(space.num_parts * 1000 + 23)
    for _ in range(20):
        w = rng.integers(0, 2, space.num_parts).astype(float)
        fast = map_inference(space, w, algorithm="fast")
        brute = map_inference(space, w, algorithm="bruteforce")
        assert fast.output == brute.output
        assert fast.score == brute.score


@pytest.mark.parametrize("space", FAST_SPACES, ids=lambda s: f"{s.kind.value}-{s.n}")
def test_marginals_fast_matches_bruteforce(space):
    rng = np.random.default_rng(space.num_parts * 1000 + 29)
    for _ in range(10):
        w = random_scores(space, rng)
        fast = marginal_inference(space, w, algorithm="fast")
        brute = marginal_inference(space, w, algorithm="bruteforce")
        assert np.allclose(fast.marginals, brute.marginals, atol=1e-9)
        assert math.isclose(
            fast.log_partition, brute.log_partition, rel_tol=1e-9, abs_tol=1e-9
        )


@pytest.mark.parametrize("space", FAST_SPACES, ids=lambda s: f"{s.kind.value}-{s.n}")
def test_marginals_normalize_per_position(space):
    rng = np.random.default_rng(space.num_parts * 1000 + 31)
    w = random_scores(space, rng)
    res = marginal_inference(space, w, algorithm="fast")
    if space.kind == SpaceKind.BIO:
        groups = [
            [part_index(space, (pos, t)) for t in ("B", "I", "O") if not (pos == 1 and t == "I")]
            for pos in range(1, space.n + 1)
        ]
    else:
        groups = [
            [
                part_index(space, (h, m))
                for h in range(space.n + 1)
                if h != m
            ]
            for m in range(1, space.n + 1)
        ]
    for group in groups:
        assert math.isclose(
            sum(res.marginals[i] for i in group), 1.0, rel_tol=0, abs_tol=1e-10
        )


def test_marginals_shift_invariance():
    for space in (BIO3, DEP2, SINGLE3):
        rng = np.random.default_rng(421)
        w = random_scores(space, rng)
        shifted = w + 7.5
        base = marginal_inference(space, w)
        moved = marginal_inference(space, shifted)
        assert np.allclose(base.marginals, moved.marginals, atol=1e-10)
        assert math.isclose(
            moved.log_partition - base.log_partition,
            7.5 * space.n,
            rel_tol=0,
            abs_tol=1e-8,
        )


def test_unknown_algorithm_rejected():
    with pytest.raises(ValueError):
        map_inference(DEP2, np.zeros(4), algorithm="magic")
    with pytest.raises(ValueError):
        marginal_inference(DEP2, np.zeros(4), algorithm="magic")


# ---------------------------------------------------------------------------
# score-vector files


def test_scores_round_trip(tmp_path):
    w = np.array([0.5, -math.inf, 2.25, 0.0])
    path = tmp_path / "scores.json"
    save_scores(DEP2, w, path)
    space, again = load_scores(path)
    assert space == DEP2
    assert again[0] == 0.5 and again[2] == 2.25 and again[3] == 0.0
    assert again[1] == -math.inf


def test_scores_to_dict_lists_every_part():
    obj = scores_to_dict(BIO2, [0.0, 1.0, 2.0, -math.inf, 4.0])
    assert obj["space"] == {"kind": "bio", "n": 2}
    assert [e["part"] for e in obj["scores"]] == [
        [1, "B"], [1, "O"], [2, "B"], [2, "I"], [2, "O"],
    ]
    assert obj["scores"][3]["value"] == "-inf"
    assert obj["scores"][4]["value"] == 4.0


def test_scores_from_dict_defaults_unlisted_to_zero():
    obj = {
        "space": {"kind": "dep_multi", "n": 2},
        "scores": [{"part": [0, 2], "value": 3.0}],
    }
    space, w = scores_from_dict(obj)
    assert list(w) == [0.0, 3.0, 0.0, 0.0]


def test_scores_from_dict_accepts_minus_inf_strings():
    obj = {
        "space": {"kind": "dep_multi", "n": 2},
        "scores": [
            {"part": [0, 1], "value": "-inf"},
            {"part": [0, 2], "value": "-Infinity"},
        ],
    }
    _, w = scores_from_dict(obj)
    assert w[0] == -math.inf and w[1] == -math.inf


@pytest.mark.parametrize(
    "obj",
    [
        {"scores": []},
        {"space": {"kind": "dep_multi", "n": 2}},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": "nope"},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": [{"part": [0, 1]}]},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": [{"value": 1.0}]},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": [{"part": [0], "value": 1.0}]},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": [{"part": [1, 1], "value": 1.0}]},
        {"space": {"kind": "bio", "n": 2}, "scores": [{"part": [1, "I"], "value": 1.0}]},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": [{"part": [0, 1], "value": "inf"}]},
        {"space": {"kind": "dep_multi", "n": 2}, "scores": [{"part": [0, 1], "value": True}]},
        {
            "space": {"kind": "dep_multi", "n": 2},
            "scores": [
                {"part": [0, 1], "value": 1.0},
                {"part": [0, 1], "value": 2.0},
            ],
        },
    ],
)
def test_malformed_score_objects_raise_parse_error(obj):
    with pytest.raises(ParseError):
        scores_from_dict(obj)


def test_load_scores_bad_file(tmp_path):
    path = tmp_path / "scores.json"
    path.write_text("[not json")
    with pytest.raises(ParseError):
        load_scores(path)


def test_score_files_written_by_save_are_canonical(tmp_path):
    path = tmp_path / "w.json"
    save_scores(DEP2, [0.0, 1.0, -math.inf, 0.5], path)
    text = path.read_text()
    assert text == json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n"
