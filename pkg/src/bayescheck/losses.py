"""Surrogate losses over structured output spaces and their pointwise risks.

Every loss here has the shape  loss(w, y) = -<w, y> + N(w)  for a convex
normalizer N that does not depend on the observed output:

  nll          N(w) = log sum_y exp <w, y>            (log partition)
  one-vs-all   N(w) = sum_y log(1 + exp <w, y>)       (independent logistic)
  sep-bio      N(w) = sum over positions of log sum over tags of exp w
  sep-dep      N(w) = sum over modifiers of log sum over heads of exp w

The two separable normalizers factor over per-group score blocks (one block
per position or modifier), which is what makes their exact risk minimizer a
table of log marginals. The head sums for sep-dep include the root arc, so
each modifier block has exactly one score per candidate head.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distributions import Distribution, marginals, mode, sample
from .errors import InvalidOutput, SpaceMismatch, WrongLossKind
from .inference import (
    marginal_inference,
    marginals_bruteforce,
    score_of,
    validate_scores,
)
from .numerics import log1pexp, logsumexp, sigmoid, softmax_masked
from .structures import (
    TAGS,
    OutputSpace,
    OutputVector,
    SpaceKind,
    enumerate_outputs,
    is_valid,
    part_index,
)


class LossKind(str, Enum):
    NLL = "nll"
    ONE_VS_ALL = "one-vs-all"
    SEP_BIO = "sep-bio"
    SEP_DEP = "sep-dep"

    @property
    def is_separable(self) -> bool:
        return self in (LossKind.SEP_BIO, LossKind.SEP_DEP)


@dataclass(frozen=True)
class LossEval:
    """A loss (or risk) value together with its gradient in w."""

    value: float
    gradient: np.ndarray


@dataclass(frozen=True)
class ZeroOneRisk:
    """Expected prediction error of the argmax rule induced by a score
    vector, next to the best risk any rule could achieve."""

    value: float
    bayes: float
    is_optimal: bool


def check_loss_space(kind: LossKind, space: OutputSpace) -> None:
    if kind == LossKind.SEP_BIO and space.kind != SpaceKind.BIO:
        raise WrongLossKind(f"sep-bio applies to bio spaces, not {space.kind.value}")
    if kind == LossKind.SEP_DEP and not space.kind.is_dep:
        raise WrongLossKind(f"sep-dep applies to dependency spaces, not {space.kind.value}")


def part_groups(space: OutputSpace) -> list[list[int]]:
    """Dense part indices blocked by position (bio) or by modifier (dep).

    Every output selects exactly one part from each block, so a per-group
    constant added to a score vector shifts all output scores equally.
    """
    groups = []
    if space.kind == SpaceKind.BIO:
        for i in range(1, space.n + 1):
            tags = ("B", "O") if i == 1 else TAGS
            groups.append([part_index(space, (i, t)) for t in tags])
    else:
        for m in range(1, space.n + 1):
            heads = [h for h in range(space.n + 1) if h != m]
            groups.append([part_index(space, (h, m)) for h in heads])
    return groups


def normalizer(
    kind: LossKind, space: OutputSpace, scores, algorithm: str = "fast",
    cap: int | None = None,
) -> float:
    """The convex term N(w) shared by every observation of the loss."""
    return _normalizer_eval(kind, space, scores, algorithm, cap, want_grad=False)[0]


def normalizer_grad(
    kind: LossKind, space: OutputSpace, scores, algorithm: str = "fast",
    cap: int | None = None,
) -> np.ndarray:
    """Gradient of N; for nll these are the Boltzmann part marginals."""
    return _normalizer_eval(kind, space, scores, algorithm, cap, want_grad=True)[1]


def _normalizer_eval(
    kind: LossKind, space: OutputSpace, scores, algorithm: str,
    cap: int | None, want_grad: bool = True,
) -> tuple[float, np.ndarray | None]:
    """N(w) and, in the same pass, its gradient."""
    check_loss_space(kind, space)
    w = validate_scores(space, scores)
    if kind == LossKind.NLL:
        if algorithm == "bruteforce":
            r = marginals_bruteforce(space, w, cap)
        else:
            r = marginal_inference(space, w, algorithm)
        return r.log_partition, r.marginals
    if kind == LossKind.ONE_VS_ALL:
        total = 0.0
        g = np.zeros(space.num_parts) if want_grad else None
        for y in enumerate_outputs(space, cap):
            s = score_of(space, w, y)
            total += log1pexp(s)
            if want_grad:
                sig = sigmoid(s)
                for i in y.indices:
                    g[i] += sig
        return total, g
    total = 0.0
    g = np.zeros(space.num_parts) if want_grad else None
    for group in part_groups(space):
        block = [float(w[i]) for i in group]
        total += logsumexp(block)
        if want_grad:
            probs = softmax_masked(block)
            for i, p in zip(group, probs):
                g[i] = p
    return total, g


def loss(
    kind: LossKind, space: OutputSpace, scores, y: OutputVector,
    algorithm: str = "fast", cap: int | None = None,
) -> LossEval:
    """-<w, y> + N(w), with gradient N'(w) minus the indicator of y."""
    w = validate_scores(space, scores)
    if y.space != space:
        raise SpaceMismatch("observed output belongs to a different space")
    if not is_valid(space, y):
        raise InvalidOutput(f"output {y.indices} is not a member of the space")
    value, grad = _normalizer_eval(kind, space, w, algorithm, cap)
    gradient = grad.copy()
    for i in y.indices:
        gradient[i] -= 1.0
    return LossEval(-score_of(space, w, y) + value, gradient)


def surrogate_risk(
    kind: LossKind, space: OutputSpace, dist: Distribution, scores,
    algorithm: str = "fast", cap: int | None = None,
) -> LossEval:
    """Exact expected loss under the distribution: mixture of -scores plus N.

    The gradient is the same mixture of per-output gradients, which collapses
    to N'(w) minus the part marginals of the distribution.
    """
    if dist.space != space:
        raise SpaceMismatch("distribution is over a different space")
    w = validate_scores(space, scores)
    expected_score = 0.0
    for y, p in zip(dist.outputs, dist.probs):
        if p == 0.0:
            continue
        expected_score += p * score_of(space, w, y)
    value, grad = _normalizer_eval(kind, space, w, algorithm, cap)
    return LossEval(-expected_score + value, grad - marginals(dist))


def surrogate_risk_value(
    kind: LossKind, space: OutputSpace, dist: Distribution, scores,
    algorithm: str = "fast", cap: int | None = None,
) -> float:
    """The risk value alone, for line searches that probe many points."""
    if dist.space != space:
        raise SpaceMismatch("distribution is over a different space")
    w = validate_scores(space, scores)
    expected_score = 0.0
    for y, p in zip(dist.outputs, dist.probs):
        if p == 0.0:
            continue
        expected_score += p * score_of(space, w, y)
    value, _ = _normalizer_eval(kind, space, w, algorithm, cap, want_grad=False)
    return -expected_score + value


def empirical_surrogate_risk(
    kind: LossKind, space: OutputSpace, dist: Distribution, scores,
    count: int, seed: int, algorithm: str = "fast", cap: int | None = None,
) -> float:
    """Monte Carlo estimate of the risk from iid draws; N is computed once."""
    w = validate_scores(space, scores)
    base, _ = _normalizer_eval(kind, space, w, algorithm, cap, want_grad=False)
    draws = sample(dist, seed, count)
    total = 0.0
    for y in draws:
        total += -score_of(space, w, y) + base
    return total / count


def zero_one_risk(
    space: OutputSpace, dist: Distribution, scores, cap: int | None = None,
) -> ZeroOneRisk:
    """Expected error of predicting from w: an output counts as correct
    exactly when its total score attains the maximum over the whole space
    (membership in the full argmax set, not a tie-broken single output).

    Also reports the best achievable error, one minus the mode mass, and
    whether this score vector attains it.
    """
    if dist.space != space:
        raise SpaceMismatch("distribution is over a different space")
    w = validate_scores(space, scores)
    outputs = enumerate_outputs(space, cap)
    values = [score_of(space, w, y) for y in outputs]
    top = max(values)
    correct_mass = 0.0
    for y, s in zip(outputs, values):
        if s == top:
            correct_mass += dist.prob_of(y)
    value = 1.0 - correct_mass
    bayes = bayes_zero_one_risk(dist)
    return ZeroOneRisk(value, bayes, value <= bayes + 1e-12)


def bayes_zero_one_risk(dist: Distribution) -> float:
    """The best achievable zero-one risk: one minus the mode mass."""
    return 1.0 - dist.prob_of(mode(dist)[0])
