"""Exact inference over structured output spaces.

MAP and marginal inference come in two flavors: brute force over the
enumerated space (the oracle, always available under the enumeration cap)
and fast exact algorithms (Viterbi and forward-backward for tag sequences,
maximum spanning arborescence and Matrix-Tree marginals for dependency
spaces). Both flavors report scores through the same accumulation rule
(`score_of`) so that results are comparable bit for bit.

Tie handling is part of the contract: when several outputs attain the
maximum score, MAP returns the one that comes first in enumeration order.
Viterbi gets this from a leftmost-lowest-tag sweep; the arborescence solver
carries an exact integer side channel (the output's enumeration rank weight)
through every contraction, so ties are resolved without floating-point
guesswork.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    IllegalPart,
    NoFiniteOutput,
    NumericallySingular,
    ParseError,
    SpaceMismatch,
    WrongSpace,
)
from .numerics import NEG_INF, logsumexp
from .structures import (
    TAGS,
    OutputSpace,
    OutputVector,
    SpaceKind,
    bio_sequence,
    dep_tree,
    enumerate_outputs,
    part_index,
    part_of_index,
)

_DET_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class MapResult:
    output: OutputVector
    score: float


@dataclass(frozen=True)
class MarginalResult:
    """Per-part inclusion probabilities plus the log partition value."""

    marginals: np.ndarray
    log_partition: float


def validate_scores(space: OutputSpace, scores) -> np.ndarray:
    """Coerce to a float array of length num_parts; entries finite or -inf."""
    arr = np.asarray(scores, dtype=float)
    if arr.shape != (space.num_parts,):
        raise DimensionMismatch(
            f"expected {space.num_parts} scores for {space.kind.value} n={space.n}, "
            f"got shape {arr.shape}"
        )
    if np.isnan(arr).any() or np.any(arr == np.inf):
        raise ValueError("scores must be finite or -inf")
    return arr


def score_of(space: OutputSpace, scores, y: OutputVector) -> float:
    """Sum of part scores, accumulated left to right in dense index order.

    Every component of the package reports output scores through this one
    function, which keeps floating-point results identical between the
    brute-force oracle and the fast algorithms.
    """
    if y.space != space:
        raise SpaceMismatch("output belongs to a different space")
    total = 0.0
    for i in y.indices:
        total = total + float(scores[i])
    return total


# ---------------------------------------------------------------------------
# brute-force oracles


def map_bruteforce(space: OutputSpace, scores, cap: int | None = None) -> MapResult:
    """Argmax by full enumeration; first output in enumeration order wins ties."""
    w = validate_scores(space, scores)
    best = None
    best_score = NEG_INF
    for y in enumerate_outputs(space, cap):
        s = score_of(space, w, y)
        if best is None or s > best_score:
            best, best_score = y, s
    if best is None or best_score == NEG_INF:
        raise NoFiniteOutput("every output has score -inf")
    return MapResult(best, best_score)


def marginals_bruteforce(
    space: OutputSpace, scores, cap: int | None = None
) -> MarginalResult:
    """Exact Boltzmann marginals by full enumeration."""
    w = validate_scores(space, scores)
    outputs = enumerate_outputs(space, cap)
    raw = [score_of(space, w, y) for y in outputs]
    log_z = logsumexp(raw)
    if log_z == NEG_INF:
        raise NoFiniteOutput("every output has score -inf")
    mu = np.zeros(space.num_parts)
    for y, s in zip(outputs, raw):
        if s == NEG_INF:
            continue
        p = math.exp(s - log_z)
        for i in y.indices:
            mu[i] += p
    return MarginalResult(np.clip(mu, 0.0, 1.0), log_z)


# ---------------------------------------------------------------------------
# tag sequences


def _legal_prev(tag: str) -> tuple[str, ...]:
    return ("B", "I") if tag == "I" else TAGS


def viterbi_bio(space: OutputSpace, scores) -> MapResult:
    """Exact MAP for tag sequences.

    A backward pass computes best-suffix values conditioned on whether an
    inside tag is currently legal; a forward sweep then picks, at each
    position, the lowest tag (B before I before O) that attains the optimum.
    The sweep order makes the returned sequence the first optimal one in
    enumeration order.
    """
    if space.kind != SpaceKind.BIO:
        raise WrongSpace(f"viterbi_bio needs a bio space, got {space.kind.value}")
    w = validate_scores(space, scores)
    n = space.n

    def part_score(i: int, tag: str) -> float:
        return float(w[part_index(space, (i, tag))])

    # suffix[i][a]: best score of positions i..n given inside-allowed flag a
    suffix = [[0.0, 0.0] for _ in range(n + 2)]
    for i in range(n, 0, -1):
        for a in (0, 1):
            best = NEG_INF
            for tag in TAGS:
                if tag == "I" and (i == 1 or not a):
                    continue
                nxt = 1 if tag in ("B", "I") else 0
                v = part_score(i, tag) + suffix[i + 1][nxt]
                if v > best:
                    best = v
            suffix[i][a] = best

    if suffix[1][0] == NEG_INF:
        raise NoFiniteOutput("every output has score -inf")

    tags = []
    a = 0
    for i in range(1, n + 1):
        for tag in TAGS:
            if tag == "I" and (i == 1 or not a):
                continue
            nxt = 1 if tag in ("B", "I") else 0
            if part_score(i, tag) + suffix[i + 1][nxt] == suffix[i][a]:
                tags.append(tag)
                a = nxt
                break
    y = bio_sequence(space, tags)
    return MapResult(y, score_of(space, w, y))


def forward_backward_bio(space: OutputSpace, scores) -> MarginalResult:
    """Exact tag marginals and log partition for a tag-sequence space."""
    if space.kind != SpaceKind.BIO:
        raise WrongSpace(f"forward_backward_bio needs a bio space, got {space.kind.value}")
    w = validate_scores(space, scores)
    n = space.n

    def part_score(i: int, tag: str) -> float:
        if i == 1 and tag == "I":
            return NEG_INF
        return float(w[part_index(space, (i, tag))])

    alpha = [{t: NEG_INF for t in TAGS} for _ in range(n + 1)]
    for t in TAGS:
        alpha[1][t] = part_score(1, t)
    for i in range(2, n + 1):
        for t in TAGS:
            incoming = [alpha[i - 1][p] for p in _legal_prev(t)]
            alpha[i][t] = part_score(i, t) + logsumexp(incoming)

    log_z = logsumexp([alpha[n][t] for t in TAGS])
    if log_z == NEG_INF:
        raise NoFiniteOutput("every output has score -inf")

    beta = [{t: NEG_INF for t in TAGS} for _ in range(n + 1)]
    for t in TAGS:
        beta[n][t] = 0.0
    for i in range(n - 1, 0, -1):
        for t in TAGS:
            outgoing = []
            for nxt in TAGS:
                if nxt == "I" and t not in ("B", "I"):
                    continue
                outgoing.append(part_score(i + 1, nxt) + beta[i + 1][nxt])
            beta[i][t] = logsumexp(outgoing)

    mu = np.zeros(space.num_parts)
    for i in range(1, n + 1):
        for t in TAGS:
            if i == 1 and t == "I":
                continue
            v = alpha[i][t] + beta[i][t]
            if v > NEG_INF:
                mu[part_index(space, (i, t))] = math.exp(v - log_z)
    return MarginalResult(np.clip(mu, 0.0, 1.0), log_z)


# ---------------------------------------------------------------------------
# dependency trees: maximum spanning arborescence


@dataclass
class _Arc:
    h: int
    m: int
    s: float
    t: int  # exact integer tie weight, larger = earlier in enumeration order
    inner: "_Arc | None" = None
    breaks: int | None = None

    @property
    def pair(self) -> tuple[float, int]:
        return (self.s, self.t)


def _find_cycle(nodes, best) -> list[int] | None:
    for start in nodes:
        if start == 0:
            continue
        seen = {}
        v = start
        while v != 0 and v not in seen:
            seen[v] = True
            v = best[v].h
        if v != 0 and v in seen:
            cycle = [v]
            u = best[v].h
            while u != v:
                cycle.append(u)
                u = best[u].h
            return cycle
    return None


def _solve_msa(nodes: list[int], arcs: list[_Arc]) -> list[_Arc]:
    best: dict[int, _Arc] = {}
    for a in arcs:
        b = best.get(a.m)
        if b is None or a.pair > b.pair:
            best[a.m] = a
    for v in nodes:
        if v == 0:
            continue
        if v not in best or best[v].s == NEG_INF:
            raise NoFiniteOutput("every output has score -inf")

    cycle = _find_cycle(nodes, best)
    if cycle is None:
        return [best[v] for v in nodes if v != 0]

    cyc = set(cycle)
    c = max(nodes) + 1
    sub_arcs = []
    for a in arcs:
        if a.h in cyc and a.m in cyc:
            continue
        if a.m in cyc:
            disp = best[a.m]
            sub_arcs.append(_Arc(a.h, c, a.s - disp.s, a.t - disp.t, inner=a, breaks=a.m))
        elif a.h in cyc:
            sub_arcs.append(_Arc(c, a.m, a.s, a.t, inner=a))
        else:
            sub_arcs.append(_Arc(a.h, a.m, a.s, a.t, inner=a))
    chosen = _solve_msa([v for v in nodes if v not in cyc] + [c], sub_arcs)

    result = []
    for a in chosen:
        result.append(a.inner)
        if a.m == c:
            result.extend(best[v] for v in cycle if v != a.breaks)
    return result


def msa(space: OutputSpace, scores) -> MapResult:
    """Exact MAP dependency tree via recursive cycle contraction.

    The single-root variant is reduced to the unconstrained problem by
    shifting every root arc down by a constant large enough that a second
    root arc can never pay for itself.
    """
    if not space.kind.is_dep:
        raise WrongSpace(f"msa needs a dependency space, got {space.kind.value}")
    w = validate_scores(space, scores)
    num = space.num_parts

    shift = 0.0
    if space.kind == SpaceKind.DEP_SINGLE:
        finite = np.abs(w[np.isfinite(w)])
        shift = 1.0 + 2.0 * float(finite.sum())

    arcs = []
    for i in range(num):
        h, m = part_of_index(space, i)
        s = float(w[i]) - (shift if h == 0 else 0.0)
        arcs.append(_Arc(h, m, s, 1 << (num - 1 - i)))

    chosen = _solve_msa(list(range(space.n + 1)), arcs)
    pairs = sorted((a.h, a.m) for a in chosen)
    if space.kind == SpaceKind.DEP_SINGLE:
        if sum(1 for h, _ in pairs if h == 0) != 1:
            raise NoFiniteOutput("no single-root tree has a finite score")
    y = dep_tree(space, pairs)
    total = score_of(space, w, y)
    if total == NEG_INF:
        raise NoFiniteOutput("every output has score -inf")
    return MapResult(y, total)


# ---------------------------------------------------------------------------
# dependency trees: Matrix-Tree marginals


def mtt_marginals(space: OutputSpace, scores) -> MarginalResult:
    """Exact arc marginals and log partition via the Matrix-Tree identity.

    Arc weights are exponentiated after a per-modifier shift, so the
    determinant stays in range for any finite score scale; the shifts are
    added back to the log partition and cancel inside the marginals.
    """
    if not space.kind.is_dep:
        raise WrongSpace(f"mtt_marginals needs a dependency space, got {space.kind.value}")
    w = validate_scores(space, scores)
    n = space.n

    W = np.full((n + 1, n + 1), NEG_INF)
    for i in range(space.num_parts):
        h, m = part_of_index(space, i)
        W[h, m] = w[i]

    shifts = np.zeros(n + 1)
    for m in range(1, n + 1):
        top = max(W[h, m] for h in range(n + 1) if h != m)
        if top == NEG_INF:
            raise NoFiniteOutput("every output has score -inf")
        shifts[m] = top

    theta = np.zeros((n + 1, n + 1))
    for m in range(1, n + 1):
        for h in range(n + 1):
            if h != m and W[h, m] > NEG_INF:
                theta[h, m] = math.exp(W[h, m] - shifts[m])

    lap = np.zeros((n, n))
    for m in range(1, n + 1):
        heads = range(n + 1) if space.kind == SpaceKind.DEP_MULTI else range(1, n + 1)
        lap[m - 1, m - 1] = sum(theta[h, m] for h in heads if h != m)
        for h in range(1, n + 1):
            if h != m:
                lap[h - 1, m - 1] = -theta[h, m]
    if space.kind == SpaceKind.DEP_SINGLE:
        lap[0, :] = [theta[0, m] for m in range(1, n + 1)]

    sign, logdet = np.linalg.slogdet(lap)
    if sign == 0.0 and logdet == NEG_INF:
        # an exactly singular Laplacian means no tree has finite score
        raise NoFiniteOutput("every output has score -inf")
    if sign <= 0 or logdet < _DET_FLOOR:
        raise NumericallySingular(
            f"spanning-tree determinant is not safely positive (sign={sign}, logdet={logdet})"
        )
    log_z = float(logdet + shifts[1:].sum())

    inv = np.linalg.inv(lap)
    mu = np.zeros(space.num_parts)
    for i in range(space.num_parts):
        h, m = part_of_index(space, i)
        if space.kind == SpaceKind.DEP_MULTI:
            if h == 0:
                val = theta[0, m] * inv[m - 1, m - 1]
            else:
                val = theta[h, m] * (inv[m - 1, m - 1] - inv[m - 1, h - 1])
        else:
            if h == 0:
                val = theta[0, m] * inv[m - 1, 0]
            else:
                diag = inv[m - 1, m - 1] if m != 1 else 0.0
                off = inv[m - 1, h - 1] if h != 1 else 0.0
                val = theta[h, m] * (diag - off)
        mu[i] = val
    return MarginalResult(np.clip(mu, 0.0, 1.0), log_z)


# ---------------------------------------------------------------------------
# dispatch

MAP_ALGORITHMS = ("fast", "bruteforce")
MARGINAL_ALGORITHMS = ("fast", "bruteforce")


def map_inference(
    space: OutputSpace, scores, algorithm: str = "fast", cap: int | None = None
) -> MapResult:
    if algorithm == "bruteforce":
        return map_bruteforce(space, scores, cap)
    if algorithm != "fast":
        raise ValueError(f"unknown map algorithm {algorithm!r}")
    if space.kind == SpaceKind.BIO:
        return viterbi_bio(space, scores)
    return msa(space, scores)


def marginal_inference(
    space: OutputSpace, scores, algorithm: str = "fast", cap: int | None = None
) -> MarginalResult:
    if algorithm == "bruteforce":
        return marginals_bruteforce(space, scores, cap)
    if algorithm != "fast":
        raise ValueError(f"unknown marginal algorithm {algorithm!r}")
    if space.kind == SpaceKind.BIO:
        return forward_backward_bio(space, scores)
    return mtt_marginals(space, scores)


# ---------------------------------------------------------------------------
# score-vector files


def scores_to_dict(space: OutputSpace, scores) -> dict:
    """Serialize a dense score vector as a per-part entry list.

    Every part is written explicitly (the reader lets unlisted parts default
    to zero, but an exhaustive listing round-trips without that rule), with
    -inf spelled as the string "-inf" since JSON has no infinities.
    """
    w = validate_scores(space, scores)
    entries = []
    for i, x in enumerate(w):
        part = part_of_index(space, i)
        entries.append({
            "part": list(part),
            "value": "-inf" if x == NEG_INF else float(x),
        })
    return {"space": {"kind": space.kind.value, "n": space.n}, "scores": entries}


def scores_from_dict(obj) -> tuple[OutputSpace, np.ndarray]:
    """Read a score vector from its per-part JSON form.

    Parts not listed in the file get score zero; listing the same part twice
    is rejected rather than silently resolved.
    """
    from .distributions import space_from_dict

    if not isinstance(obj, dict) or "space" not in obj or "scores" not in obj:
        raise ParseError("score object needs 'space' and 'scores'")
    space = space_from_dict(obj["space"])
    raw = obj["scores"]
    if not isinstance(raw, list):
        raise ParseError("'scores' must be a list")
    w = np.zeros(space.num_parts)
    seen = set()
    for entry in raw:
        if not isinstance(entry, dict) or "part" not in entry or "value" not in entry:
            raise ParseError(f"malformed score entry {entry!r}")
        part = entry["part"]
        if not isinstance(part, list) or len(part) != 2:
            raise ParseError(f"malformed part {part!r}")
        try:
            idx = part_index(space, tuple(part))
        except (IllegalPart, TypeError, ValueError) as exc:
            raise ParseError(f"part {part!r} does not belong to the space") from exc
        if idx in seen:
            raise ParseError(f"part {part!r} listed twice")
        seen.add(idx)
        x = entry["value"]
        if isinstance(x, str):
            if x.strip() not in ("-inf", "-Infinity"):
                raise ParseError(f"malformed score value {x!r}")
            w[idx] = NEG_INF
        elif isinstance(x, (int, float)) and not isinstance(x, bool):
            w[idx] = float(x)
        else:
            raise ParseError(f"malformed score value {x!r}")
    try:
        return space, validate_scores(space, w)
    except (DimensionMismatch, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def save_scores(space: OutputSpace, scores, path) -> None:
    Path(path).write_text(
        json.dumps(scores_to_dict(space, scores), indent=2, sort_keys=True) + "\n"
    )


def load_scores(path) -> tuple[OutputSpace, np.ndarray]:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read score file {path}: {exc}") from exc
    return scores_from_dict(obj)
