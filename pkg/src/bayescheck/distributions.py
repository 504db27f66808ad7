"""Explicit distributions over an enumerated output space.

A distribution is a plain table: the supported outputs and their masses.
That is all the pointwise analysis needs, and it keeps every downstream
quantity (marginals, modes, risks) exactly computable.

File format (JSON)::

    {"space": {"kind": "bio"|"dep_multi"|"dep_single", "n": int},
     "outcomes": [{"parts": [[h, m], ...] | [[pos, "B"|"I"|"O"], ...],
                   "prob": float | "decimal string"}, ...]}

Probabilities may be decimal strings so that file text stays canonical.
Outputs not listed have probability zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    IllegalPart,
    InvalidDistribution,
    ParseError,
    SpaceMismatch,
)
from .rng import SplitMix64
from .structures import (
    OutputSpace,
    OutputVector,
    SpaceKind,
    enumerate_outputs,
    is_valid,
)

MASS_TOLERANCE = 1e-9

FIXTURE_NAMES = ("ner-bio2", "dep-multi2", "dep-single3")


@dataclass(frozen=True)
class Distribution:
    """Probability table over one output space, in enumeration order."""

    space: OutputSpace
    outputs: tuple[OutputVector, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.outputs) != len(self.probs):
            raise InvalidDistribution("outputs and probs lengths differ")
        seen = set()
        for y in self.outputs:
            if y.space != self.space:
                raise SpaceMismatch("output belongs to a different space")
            if not is_valid(self.space, y):
                raise InvalidDistribution(f"invalid output {y.part_ids()}")
            if y.indices in seen:
                raise InvalidDistribution(f"duplicate output {y.part_ids()}")
            seen.add(y.indices)
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise InvalidDistribution("probabilities must lie in [0, 1]")
        total = sum(self.probs)
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise InvalidDistribution(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_pairs(cls, space: OutputSpace, pairs) -> "Distribution":
        """Build from (OutputVector, prob) pairs; canonicalizes the order."""
        items = sorted(pairs, key=lambda op: op[0].rank_key(), reverse=True)
        return cls(
            space,
            tuple(y for y, _ in items),
            tuple(float(p) for _, p in items),
        )

    def prob_of(self, y: OutputVector) -> float:
        for out, p in zip(self.outputs, self.probs):
            if out.indices == y.indices:
                return p
        return 0.0

    def support_size(self) -> int:
        return sum(1 for p in self.probs if p > 0.0)

    def is_full_support(self, cap: int | None = None) -> bool:
        return self.support_size() == len(enumerate_outputs(self.space, cap))


def marginals(dist: Distribution) -> np.ndarray:
    """Per-part inclusion probabilities: values[c] = sum of p(y) over y containing c."""
    mu = np.zeros(dist.space.num_parts)
    for y, p in zip(dist.outputs, dist.probs):
        for i in y.indices:
            mu[i] += p
    return mu


def mode(dist: Distribution) -> tuple[OutputVector, ...]:
    """All outputs attaining the maximum probability, in enumeration order."""
    top = max(dist.probs)
    return tuple(y for y, p in zip(dist.outputs, dist.probs) if p == top)


def entropy(dist: Distribution) -> float:
    return float(-sum(p * np.log(p) for p in dist.probs if p > 0.0))


def sample(dist: Distribution, seed: int, count: int) -> list[OutputVector]:
    """count i.i.d. draws by inverse CDF over the stored (enumeration) order."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    cdf = np.cumsum(dist.probs)
    stream = SplitMix64(seed)
    draws = []
    for _ in range(count):
        u = stream.next_double()
        idx = int(np.searchsorted(cdf, u, side="right"))
        idx = min(idx, len(dist.outputs) - 1)  # guard the top of the CDF
        draws.append(dist.outputs[idx])
    return draws


# ---------------------------------------------------------------------------
# serialization


def space_to_dict(space: OutputSpace) -> dict:
    return {"kind": space.kind.value, "n": space.n}


def space_from_dict(obj) -> OutputSpace:
    try:
        kind = SpaceKind(obj["kind"])
        n = int(obj["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed space object: {obj!r}") from exc
    return OutputSpace(kind, n)


def _parts_to_json(y: OutputVector) -> list[list]:
    return [list(p) for p in y.part_ids()]


def _output_from_json(space: OutputSpace, parts) -> OutputVector:
    if not isinstance(parts, list):
        raise ParseError(f"parts must be a list, got {parts!r}")
    decoded = []
    for item in parts:
        if not isinstance(item, list) or len(item) != 2:
            raise ParseError(f"malformed part {item!r}")
        decoded.append(tuple(item))
    return OutputVector.from_parts(space, decoded)


def distribution_to_dict(dist: Distribution) -> dict:
    return {
        "space": space_to_dict(dist.space),
        "outcomes": [
            {"parts": _parts_to_json(y), "prob": repr(p)}
            for y, p in zip(dist.outputs, dist.probs)
        ],
    }


def distribution_from_dict(obj) -> Distribution:
    if not isinstance(obj, dict) or "space" not in obj or "outcomes" not in obj:
        raise ParseError("distribution object needs 'space' and 'outcomes'")
    space = space_from_dict(obj["space"])
    pairs = []
    for outcome in obj["outcomes"]:
        if not isinstance(outcome, dict) or "parts" not in outcome or "prob" not in outcome:
            raise ParseError(f"malformed outcome {outcome!r}")
        prob = outcome["prob"]
        try:
            prob = float(prob)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"malformed probability {prob!r}") from exc
        try:
            y = _output_from_json(space, outcome["parts"])
        except ParseError:
            raise
        except (IllegalPart, DimensionMismatch, ValueError) as exc:
            raise InvalidDistribution(str(exc)) from exc
        pairs.append((y, prob))
    try:
        return Distribution.from_pairs(space, pairs)
    except SpaceMismatch as exc:
        raise InvalidDistribution(str(exc)) from exc


def save_distribution(dist: Distribution, path) -> None:
    Path(path).write_text(
        json.dumps(distribution_to_dict(dist), indent=2, sort_keys=True) + "\n"
    )


def load_distribution(path) -> Distribution:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read distribution file {path}: {exc}") from exc
    return distribution_from_dict(obj)


# ---------------------------------------------------------------------------
# bundled fixtures

_FIXTURE_FILES = {
    "ner-bio2": "ner_bio2.json",
    "dep-multi2": "dep_multi2.json",
    "dep-single3": "dep_single3.json",
}


def fixture_path(name: str) -> Path:
    if name not in _FIXTURE_FILES:
        raise KeyError(f"unknown fixture {name!r}; choices: {FIXTURE_NAMES}")
    return Path(resources.files("bayescheck").joinpath("fixtures").joinpath(_FIXTURE_FILES[name]))


def load_fixture(name: str, fixture_dir: Path | str | None = None) -> Distribution:
    """One of the bundled counterexample distributions.

    fixture_dir overrides the packaged data directory (used by the
    reproduce command to point at externally supplied fixture files).
    """
    if fixture_dir is not None:
        if name not in _FIXTURE_FILES:
            raise KeyError(f"unknown fixture {name!r}; choices: {FIXTURE_NAMES}")
        return load_distribution(Path(fixture_dir) / _FIXTURE_FILES[name])
    return load_distribution(fixture_path(name))
