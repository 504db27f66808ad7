"""Pointwise risk minimization and mechanical consistency verdicts.

Given a loss and an explicit distribution, this module finds the score
vector that minimizes the pointwise surrogate risk (in closed form when the
loss structure allows it, by least squares when the distribution is
realizable, and by gradient descent otherwise) and then compares how that
minimizer ranks the distribution's modes against everything else.

The verdict is deliberately three-valued. "inconsistent" is a certificate:
a witness pair (a, b) with a a mode, b strictly less probable, and b scored
strictly higher than a. "consistent" requires every mode to attain the exact
score maximum and to beat every non-mode by more than the tie tolerance.
Anything in between stays "undetermined" rather than being rounded to a
verdict, and verdicts reached through a numerical minimizer carry an
"empirical" flag because descent output is evidence, not proof.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .distributions import Distribution, marginals, mode
from .errors import Infeasible, UnsupportedOutputs, WrongLossKind
from .inference import map_inference, score_of, validate_scores
from .losses import (
    LossKind,
    ZeroOneRisk,
    bayes_zero_one_risk,
    check_loss_space,
    part_groups,
    surrogate_risk,
    surrogate_risk_value,
    zero_one_risk,
)
from .numerics import logsumexp, safe_log
from .rng import substream
from .structures import OutputSpace, OutputVector, enumerate_outputs, is_valid, part_index

DEFAULT_TIE_TOLERANCE = 1e-9
PROB_GAP = 1e-12
REALIZABLE_RESIDUAL = 1e-9
MODE_MARGIN = 1e-3


# ---------------------------------------------------------------------------
# exact minimizers


def closed_form_minimizer(kind: LossKind, dist: Distribution) -> np.ndarray:
    """Log part marginals: the exact risk minimizer for the separable losses.

    Each separable normalizer block is a softmax over one group, so setting
    every block to the log of its marginal profile zeroes the gradient; zero
    marginals map to -inf.
    """
    if not kind.is_separable:
        raise WrongLossKind(f"{kind.value} has no closed-form minimizer")
    check_loss_space(kind, dist.space)
    return np.array([safe_log(v) for v in marginals(dist)])


def nll_realizable_minimizer(
    dist: Distribution, cap: int | None = None
) -> tuple[np.ndarray, float]:
    """Least-squares solve of <w, y> = log p(y) over a full-support table.

    Returns the solution together with its max absolute residual. A residual
    at numerical zero certifies that the distribution is realizable and that
    the solution minimizes the nll risk exactly (the log partition at the
    solution is log of the total mass, which is zero).
    """
    space = dist.space
    outputs = enumerate_outputs(space, cap)
    if not dist.is_full_support(cap):
        raise UnsupportedOutputs(
            "nll risk has no finite minimizer unless every output has mass"
        )
    table = {y.indices: p for y, p in zip(dist.outputs, dist.probs)}
    a = np.zeros((len(outputs), space.num_parts))
    b = np.zeros(len(outputs))
    for r, y in enumerate(outputs):
        for i in y.indices:
            a[r, i] = 1.0
        b[r] = np.log(table[y.indices])
    w, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.max(np.abs(a @ w - b)))
    return w, residual


def realizability_residual(space: OutputSpace, dist: Distribution, scores) -> float:
    """max over the support of |<w, y> - log p(y)|."""
    w = validate_scores(space, scores)
    worst = 0.0
    for y, p in zip(dist.outputs, dist.probs):
        if p == 0.0:
            continue
        worst = max(worst, abs(score_of(space, w, y) - float(np.log(p))))
    return worst


# ---------------------------------------------------------------------------
# numerical minimization


@dataclass(frozen=True)
class OptimizerConfig:
    step_rule: str = "backtracking"  # or "fixed"
    eta: float = 0.5
    beta: float = 0.5
    armijo_c: float = 1e-4
    grad_tolerance: float = 1e-8
    max_iters: int = 20000
    seed: int = 0


@dataclass(frozen=True)
class MinimizeResult:
    scores: np.ndarray
    risk: float
    grad_norm: float
    iterations: int
    converged: bool


def _canonicalize_separable(space: OutputSpace, w: np.ndarray) -> np.ndarray:
    """Shift each group so its log normalizer is zero.

    The separable risks are flat along per-group constant shifts (every
    output picks exactly one part per group), so descent alone fixes only
    the within-group profile. In the shifted frame the unique minimizer has
    coordinates equal to the log marginals.
    """
    out = w.copy()
    for group in part_groups(space):
        out[group] -= logsumexp([float(out[i]) for i in group])
    return out


def minimize_risk(
    kind: LossKind,
    dist: Distribution,
    config: OptimizerConfig | None = None,
    cap: int | None = None,
) -> MinimizeResult:
    """Gradient descent on the pointwise surrogate risk from the zero vector.

    Runs until the gradient infinity norm drops to the tolerance or the
    iteration budget runs out; the best iterate seen is returned either way,
    with `converged` recording which case happened.
    """
    space = dist.space
    check_loss_space(kind, space)
    cfg = config or OptimizerConfig()
    if cfg.step_rule not in ("fixed", "backtracking"):
        raise ValueError(f"unknown step rule {cfg.step_rule!r}")

    w = np.zeros(space.num_parts)
    ev = surrogate_risk(kind, space, dist, w, cap=cap)
    risk, grad = ev.value, ev.gradient
    best_w, best_risk = w, risk
    grad_norm = float(np.max(np.abs(grad)))
    iters = 0

    while grad_norm > cfg.grad_tolerance and iters < cfg.max_iters:
        if cfg.step_rule == "fixed":
            w = w - cfg.eta * grad
        else:
            t = 1.0
            sq = float(grad @ grad)
            while t > 1e-20:
                cand_risk = surrogate_risk_value(kind, space, dist, w - t * grad, cap=cap)
                if cand_risk <= risk - cfg.armijo_c * t * sq:
                    break
                t *= cfg.beta
            w = w - t * grad
        ev = surrogate_risk(kind, space, dist, w, cap=cap)
        risk, grad = ev.value, ev.gradient
        iters += 1
        if risk < best_risk:
            best_w, best_risk = w, risk
        grad_norm = float(np.max(np.abs(grad)))

    if best_risk < risk:
        w, risk = best_w, best_risk
        grad = surrogate_risk(kind, space, dist, w, cap=cap).gradient
        grad_norm = float(np.max(np.abs(grad)))
    if kind.is_separable:
        w = _canonicalize_separable(space, w)
        risk = surrogate_risk_value(kind, space, dist, w, cap=cap)
    return MinimizeResult(w, float(risk), grad_norm, iters, grad_norm <= cfg.grad_tolerance)


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class ConsistencyVerdict:
    status: str  # "consistent" | "inconsistent" | "undetermined"
    kind: LossKind
    space: OutputSpace
    minimizer: np.ndarray | None
    minimizer_source: str  # "closed-form" | "least-squares" | "numerical" | "none"
    empirical: bool  # verdict rests on a descent output, not an exact solve
    realizable: bool | None  # nll only: least-squares residual at numerical zero
    modes: tuple[OutputVector, ...]
    witness_mode: OutputVector | None
    witness_other: OutputVector | None
    gap: float | None  # witness score gap, or the mode margin when consistent
    map_output: OutputVector | None
    zero_one: ZeroOneRisk | None
    nll_residual: float | None
    reason: str | None


def _rank_verdict(
    space: OutputSpace,
    dist: Distribution,
    w: np.ndarray,
    tie_tolerance: float,
    cap: int | None,
):
    """Compare the score ranking induced by w against the probability modes.

    Returns (status, witness pair or None, gap, modes). Consistent demands
    every mode sit in the exact argmax set of the scores and, when non-modes
    exist, a margin above the best non-mode larger than the tie tolerance.
    A witness is a mode a and a strictly less probable b scored strictly
    higher; among witnesses the largest gap wins, then enumeration order.
    """
    outputs = enumerate_outputs(space, cap)
    table = {y.indices: p for y, p in zip(dist.outputs, dist.probs)}
    probs = [table.get(y.indices, 0.0) for y in outputs]
    scores = [score_of(space, w, y) for y in outputs]
    pmax = max(probs)
    mode_pos = [i for i, p in enumerate(probs) if p == pmax]
    other_pos = [i for i, p in enumerate(probs) if p != pmax]
    modes = tuple(outputs[i] for i in mode_pos)

    top = max(scores)
    all_modes_argmax = all(scores[i] == top for i in mode_pos)
    if all_modes_argmax:
        if not other_pos:
            return "consistent", None, float("inf"), modes
        margin = top - max(scores[i] for i in other_pos)
        if margin > tie_tolerance:
            return "consistent", None, margin, modes

    best = None  # (-gap, a_pos, b_pos)
    for a in mode_pos:
        for b_pos in range(len(outputs)):
            if pmax - probs[b_pos] <= PROB_GAP:
                continue
            gap = scores[b_pos] - scores[a]
            if gap <= tie_tolerance:
                continue
            key = (-gap, a, b_pos)
            if best is None or key < best:
                best = key
    if best is not None:
        gap, a, b_pos = -best[0], best[1], best[2]
        return "inconsistent", (outputs[a], outputs[b_pos]), gap, modes
    return "undetermined", None, None, modes


def consistency_verdict(
    kind: LossKind,
    dist: Distribution,
    optimizer: OptimizerConfig | None = None,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
    cap: int | None = None,
) -> ConsistencyVerdict:
    """Minimize the pointwise risk for this loss, then rank modes by score."""
    space = dist.space
    check_loss_space(kind, space)
    modes = mode(dist)

    residual = None
    realizable = None
    reason = None
    if kind.is_separable:
        w = closed_form_minimizer(kind, dist)
        source = "closed-form"
    elif kind == LossKind.NLL:
        if not dist.is_full_support(cap):
            return ConsistencyVerdict(
                "undetermined", kind, space, None, "none", False, False, modes,
                None, None, None, None, None, None,
                "nll risk has no finite minimizer without full support",
            )
        w, residual = nll_realizable_minimizer(dist, cap)
        realizable = residual <= REALIZABLE_RESIDUAL
        if realizable:
            source = "least-squares"
        else:
            fit = minimize_risk(kind, dist, optimizer, cap)
            w = fit.scores
            source = "numerical"
            if not fit.converged:
                reason = "risk minimization did not converge"
    else:
        fit = minimize_risk(kind, dist, optimizer, cap)
        w = fit.scores
        source = "numerical"
        if not fit.converged:
            reason = "risk minimization did not converge"

    empirical = source == "numerical"
    if reason is not None:
        return ConsistencyVerdict(
            "undetermined", kind, space, w, source, empirical, realizable, modes,
            None, None, None, None, None, residual, reason,
        )

    status, witness, gap, modes = _rank_verdict(space, dist, w, tie_tolerance, cap)
    map_out = map_inference(space, w).output
    return ConsistencyVerdict(
        status, kind, space, w, source, empirical, realizable, modes,
        witness[0] if witness else None,
        witness[1] if witness else None,
        gap, map_out, zero_one_risk(space, dist, w, cap), residual,
        None if status != "undetermined" else "score ties within tolerance",
    )


# ---------------------------------------------------------------------------
# randomized search


@dataclass(frozen=True)
class Counterexample:
    trial: int
    dist: Distribution
    verdict: ConsistencyVerdict


@dataclass(frozen=True)
class SearchResult:
    kind: LossKind
    space: OutputSpace
    trials: int
    seed: int
    alpha: float
    counterexamples: tuple[Counterexample, ...]


def search_counterexamples(
    kind: LossKind,
    space: OutputSpace,
    trials: int,
    seed: int,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
    alpha: float = 1.0,
    optimizer: OptimizerConfig | None = None,
    jobs: int = 1,
    cap: int | None = None,
) -> SearchResult:
    """Check the loss against `trials` symmetric-Dirichlet draws.

    Each trial derives its own substream from (seed, trial index), so the
    result set does not depend on the worker count. Smaller alpha
    concentrates draws near the simplex corners, where score reversals are
    easier to hit.
    """
    check_loss_space(kind, space)
    outputs = enumerate_outputs(space, cap)

    def run(trial: int) -> Counterexample | None:
        rng = substream(seed, trial)
        probs = rng.dirichlet(alpha, len(outputs))
        dist = Distribution(space, outputs, tuple(probs))
        verdict = consistency_verdict(kind, dist, optimizer, tie_tolerance, cap)
        if verdict.status == "inconsistent":
            return Counterexample(trial, dist, verdict)
        return None

    if jobs <= 1:
        found = [run(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(run, range(trials)))
    return SearchResult(
        kind, space, trials, seed, alpha,
        tuple(c for c in found if c is not None),
    )


# ---------------------------------------------------------------------------
# distribution reconstruction


def reconstruct_from_marginals(
    space: OutputSpace,
    constraints: list[tuple[tuple, float]],
    mode_preference: tuple[OutputVector, OutputVector],
    margin: float = MODE_MARGIN,
    min_prob: float = 0.0,
    cap: int | None = None,
) -> Distribution:
    """Find a distribution with the given part marginals and a chosen mode.

    `mode_preference` is a pair (a, b): the returned table gives a the
    largest mass, beating every other output (b included) by at least
    `margin`. Solved as a linear program over the full output table:
    probabilities in [min_prob, 1], unit total mass, exact marginal targets,
    and the mode-margin rows, maximizing the mode's own mass so the answer
    is a deterministic vertex. Raises Infeasible when no table satisfies
    all of it.
    """
    outputs = enumerate_outputs(space, cap)
    k = len(outputs)
    a_out, b_out = mode_preference
    for y in (a_out, b_out):
        if y.space != space or not is_valid(space, y):
            raise Infeasible(f"mode preference {y.indices} is not a valid output")
    if a_out.indices == b_out.indices:
        raise Infeasible("mode preference needs two distinct outputs")
    mode_pos = next(i for i, y in enumerate(outputs) if y.indices == a_out.indices)

    a_eq = [np.ones(k)]
    b_eq = [1.0]
    for part, value in constraints:
        idx = part_index(space, part)
        row = np.zeros(k)
        for i, y in enumerate(outputs):
            if idx in y.indices:
                row[i] = 1.0
        a_eq.append(row)
        b_eq.append(float(value))

    a_ub = []
    b_ub = []
    for i in range(k):
        if i == mode_pos:
            continue
        row = np.zeros(k)
        row[i] = 1.0
        row[mode_pos] = -1.0
        a_ub.append(row)
        b_ub.append(-margin)

    c = np.zeros(k)
    c[mode_pos] = -1.0
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq),
        b_eq=np.array(b_eq),
        bounds=[(min_prob, 1.0)] * k,
        method="highs",
    )
    if not res.success:
        raise Infeasible(f"no distribution matches the requested marginals: {res.message}")
    probs = np.clip(res.x, 0.0, None)
    probs = probs / probs.sum()
    return Distribution(space, outputs, tuple(float(p) for p in probs))
