"""Replay the bundled counterexample arguments end to end.

Each target loads a frozen fixture distribution, recomputes every number in
the corresponding inconsistency argument (minimizer coordinates, the two
inner products, the score gap, the realizability residual), and compares
them against the expected values at tight tolerances. The result is a list
of named check lines so callers can render an expected-vs-computed diff and
an overall pass flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .consistency import (
    DEFAULT_TIE_TOLERANCE,
    consistency_verdict,
    realizability_residual,
)
from .distributions import Distribution, load_fixture, marginals
from .errors import BayescheckError
from .inference import score_of
from .losses import LossKind
from .structures import bio_sequence, dep_tree, part_index

TARGETS = ("ner", "dep", "singleroot")

COORD_TOLERANCE = 1e-12
GAP_TOLERANCE = 1e-12
MARGINAL_TOLERANCE = 1e-9
RESIDUAL_BOUND = 1e-9
PINNED_RESIDUAL_BOUND = 1e-12


@dataclass(frozen=True)
class CheckLine:
    name: str
    expected: str
    computed: str
    ok: bool
    informational: bool = False


@dataclass(frozen=True)
class TargetResult:
    target: str
    checks: tuple[CheckLine, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks if not c.informational)


def _num(x: float) -> str:
    return repr(float(x))


def _vector_check(name: str, expected: np.ndarray, computed: np.ndarray, tol: float) -> CheckLine:
    err = float(np.max(np.abs(np.asarray(expected) - np.asarray(computed))))
    return CheckLine(
        name,
        "[" + ", ".join(_num(v) for v in expected) + "]",
        "[" + ", ".join(_num(v) for v in computed) + "]",
        err <= tol,
    )


def _value_check(name: str, expected: float, computed: float, tol: float) -> CheckLine:
    return CheckLine(name, _num(expected), _num(computed), abs(expected - computed) <= tol)


def _bound_check(name: str, bound: float, computed: float) -> CheckLine:
    return CheckLine(name, f"<= {_num(bound)}", _num(computed), computed <= bound)


def _status_check(name: str, expected: str, computed: str) -> CheckLine:
    return CheckLine(name, expected, computed, computed == expected)


def _load(name: str, fixture_dir: Path | str | None) -> tuple[Distribution | None, CheckLine]:
    try:
        dist = load_fixture(name, fixture_dir)
    except BayescheckError as exc:
        return None, CheckLine(f"{name} fixture loads", "a valid distribution", str(exc), False)
    return dist, CheckLine(f"{name} fixture loads", "a valid distribution", "ok", True)


def _reproduce_ner(fixture_dir: Path | str | None, tie_tolerance: float) -> TargetResult:
    checks = []
    dist, loaded = _load("ner-bio2", fixture_dir)
    checks.append(loaded)
    if dist is None:
        return TargetResult("ner", tuple(checks))
    space = dist.space

    verdict = consistency_verdict(LossKind.SEP_BIO, dist, tie_tolerance=tie_tolerance)
    w = verdict.minimizer
    expected_w = np.array([math.log(v) for v in (0.65, 0.35, 0.4, 0.3, 0.3)])
    checks.append(_vector_check("sep-bio minimizer (log marginals)", expected_w, w, COORD_TOLERANCE))

    a = bio_sequence(space, "BI")
    b = bio_sequence(space, "BB")
    sa = score_of(space, w, a)
    sb = score_of(space, w, b)
    checks.append(_value_check("score of (B,I)", math.log(0.65) + math.log(0.3), sa, GAP_TOLERANCE))
    checks.append(_value_check("score of (B,B)", math.log(0.65) + math.log(0.4), sb, GAP_TOLERANCE))
    checks.append(CheckLine("mode (B,I) scored below (B,B)", "score(B,I) < score(B,B)",
                            f"{_num(sa)} < {_num(sb)}" if sa < sb else f"{_num(sa)} >= {_num(sb)}",
                            sa < sb))
    checks.append(_value_check("witness gap", math.log(0.4) - math.log(0.3),
                               verdict.gap if verdict.gap is not None else math.nan, GAP_TOLERANCE))
    checks.append(_status_check("sep-bio verdict", "inconsistent", verdict.status))
    witness = "none"
    if verdict.witness_mode is not None:
        witness = f"{verdict.witness_mode.bio_tags()} vs {verdict.witness_other.bio_tags()}"
    checks.append(_status_check("sep-bio witness", "('B', 'I') vs ('B', 'B')", witness))

    nll = consistency_verdict(LossKind.NLL, dist, tie_tolerance=tie_tolerance)
    checks.append(_bound_check("nll realizability residual", RESIDUAL_BOUND,
                               nll.nll_residual if nll.nll_residual is not None else math.inf))
    checks.append(_status_check("nll verdict", "consistent", nll.status))
    return TargetResult("ner", tuple(checks))


def _reproduce_dep(fixture_dir: Path | str | None, tie_tolerance: float) -> TargetResult:
    checks = []
    dist, loaded = _load("dep-multi2", fixture_dir)
    checks.append(loaded)
    if dist is None:
        return TargetResult("dep", tuple(checks))
    space = dist.space

    verdict = consistency_verdict(LossKind.SEP_DEP, dist, tie_tolerance=tie_tolerance)
    w = verdict.minimizer
    expected_w = np.array([math.log(v) for v in (0.7, 0.6, 0.4, 0.3)])
    checks.append(_vector_check("sep-dep minimizer (log marginals)", expected_w, w, COORD_TOLERANCE))

    a = dep_tree(space, [(0, 1), (1, 2)])
    b = dep_tree(space, [(0, 1), (0, 2)])
    sa = score_of(space, w, a)
    sb = score_of(space, w, b)
    checks.append(_value_check("score of {(0,1),(1,2)}", math.log(0.7) + math.log(0.4), sa, GAP_TOLERANCE))
    checks.append(_value_check("score of {(0,1),(0,2)}", math.log(0.7) + math.log(0.6), sb, GAP_TOLERANCE))
    checks.append(CheckLine("mode tree scored below flat tree", "score(a) < score(b)",
                            f"{_num(sa)} < {_num(sb)}" if sa < sb else f"{_num(sa)} >= {_num(sb)}",
                            sa < sb))
    checks.append(_value_check("witness gap", math.log(0.6) - math.log(0.4),
                               verdict.gap if verdict.gap is not None else math.nan, GAP_TOLERANCE))
    checks.append(_status_check("sep-dep verdict", "inconsistent", verdict.status))
    witness = "none"
    if verdict.witness_mode is not None:
        witness = f"{verdict.witness_mode.part_ids()} vs {verdict.witness_other.part_ids()}"
    checks.append(_status_check("sep-dep witness",
                                "((0, 1), (1, 2)) vs ((0, 1), (0, 2))", witness))

    nll = consistency_verdict(LossKind.NLL, dist, tie_tolerance=tie_tolerance)
    checks.append(_bound_check("nll realizability residual", RESIDUAL_BOUND,
                               nll.nll_residual if nll.nll_residual is not None else math.inf))
    pinned = np.array([0.0, math.log(0.3), math.log(0.4), 0.0])
    checks.append(_bound_check("pinned nll assignment residual", PINNED_RESIDUAL_BOUND,
                               realizability_residual(space, dist, pinned)))
    checks.append(_status_check("nll verdict", "consistent", nll.status))
    return TargetResult("dep", tuple(checks))


def _reproduce_singleroot(fixture_dir: Path | str | None, tie_tolerance: float) -> TargetResult:
    checks = []
    dist, loaded = _load("dep-single3", fixture_dir)
    checks.append(loaded)
    if dist is None:
        return TargetResult("singleroot", tuple(checks))
    space = dist.space

    mu = marginals(dist)
    constrained = [((0, 1), 0.55), ((1, 2), 0.55), ((1, 3), 0.40), ((2, 3), 0.45)]
    expected_mu = np.array([v for _, v in constrained])
    computed_mu = np.array([mu[part_index(space, part)] for part, _ in constrained])
    checks.append(_vector_check("marginals of arcs (0,1),(1,2),(1,3),(2,3)",
                                expected_mu, computed_mu, MARGINAL_TOLERANCE))

    verdict = consistency_verdict(LossKind.SEP_DEP, dist, tie_tolerance=tie_tolerance)
    w = verdict.minimizer
    a = dep_tree(space, [(0, 1), (1, 2), (1, 3)])
    b = dep_tree(space, [(0, 1), (1, 2), (2, 3)])
    sa = score_of(space, w, a)
    sb = score_of(space, w, b)
    checks.append(_value_check("score of mode tree a",
                               math.log(0.55) + math.log(0.55) + math.log(0.4), sa, GAP_TOLERANCE))
    checks.append(_value_check("score of tree b",
                               math.log(0.55) + math.log(0.55) + math.log(0.45), sb, GAP_TOLERANCE))
    checks.append(_value_check("score difference a minus b", math.log(0.40 / 0.45),
                               sa - sb, GAP_TOLERANCE))
    checks.append(_status_check("sep-dep verdict", "inconsistent", verdict.status))
    map_parts = "none" if verdict.map_output is None else str(verdict.map_output.part_ids())
    checks.append(_status_check("single-root MAP of the minimizer",
                                "((0, 1), (1, 2), (2, 3))", map_parts))

    nll = consistency_verdict(LossKind.NLL, dist, tie_tolerance=tie_tolerance)
    checks.append(CheckLine(
        "nll verdict (no expectation: non-realizable, numerical minimizer)",
        "informational",
        f"{nll.status} (empirical={nll.empirical}, residual={_num(nll.nll_residual)})",
        True,
        informational=True,
    ))
    return TargetResult("singleroot", tuple(checks))


_RUNNERS = {
    "ner": _reproduce_ner,
    "dep": _reproduce_dep,
    "singleroot": _reproduce_singleroot,
}


def reproduce(
    target: str,
    fixture_dir: Path | str | None = None,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
) -> list[TargetResult]:
    """Run one bundled argument (or all of them) and report check lines."""
    if target == "all":
        names = list(TARGETS)
    elif target in _RUNNERS:
        names = [target]
    else:
        raise ValueError(f"unknown reproduce target {target!r}")
    return [_RUNNERS[name](fixture_dir, tie_tolerance) for name in names]
