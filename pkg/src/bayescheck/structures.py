"""Output spaces, their part sets, validity predicates, and enumeration.

Two families of structured output spaces are supported:

* BIO tagging over n tokens with a single mention label.  The part set is
  every (position, tag) pair except (1, I), which no valid sequence can use
  and is therefore excluded from the indexing entirely.
* Unlabeled dependency trees over n words plus an artificial root at
  position 0: the parts are all (head, modifier) arcs, and the valid outputs
  are the 0-rooted spanning arborescences.  The single-root variant
  additionally requires exactly one arc leaving position 0.

All types are immutable; every function here is pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import DimensionMismatch, IllegalPart, SpaceTooLarge

TAGS = ("B", "I", "O")

# Enumeration is the desk-scale oracle; defaults keep |Y| well under 10^6.
DEFAULT_BIO_CAP = 8
DEFAULT_DEP_CAP = 6


class SpaceKind(str, Enum):
    BIO = "bio"
    DEP_MULTI = "dep_multi"
    DEP_SINGLE = "dep_single"

    @property
    def is_dep(self) -> bool:
        return self in (SpaceKind.DEP_MULTI, SpaceKind.DEP_SINGLE)


# A part is (position, tag) for BIO and (head, modifier) for dependencies.
Part = tuple[int, str] | tuple[int, int]


@dataclass(frozen=True)
class OutputSpace:
    """A family of structured outputs over a shared part set."""

    kind: SpaceKind
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    @property
    def num_parts(self) -> int:
        if self.kind is SpaceKind.BIO:
            return 3 * self.n - 1
        return self.n * self.n

    def parts(self) -> tuple[Part, ...]:
        """All parts in dense index order."""
        return _parts_cached(self.kind, self.n)

    def default_cap(self) -> int:
        return DEFAULT_BIO_CAP if self.kind is SpaceKind.BIO else DEFAULT_DEP_CAP


@lru_cache(maxsize=None)
def _parts_cached(kind: SpaceKind, n: int) -> tuple[Part, ...]:
    out: list[Part] = []
    if kind is SpaceKind.BIO:
        # position-major, tag order B, I, O; (1, I) is not a part
        for pos in range(1, n + 1):
            for tag in TAGS:
                if pos == 1 and tag == "I":
                    continue
                out.append((pos, tag))
    else:
        # head-major, then modifier
        for head in range(0, n + 1):
            for mod in range(1, n + 1):
                if head != mod:
                    out.append((head, mod))
    return tuple(out)


@lru_cache(maxsize=None)
def _index_cached(kind: SpaceKind, n: int) -> dict[Part, int]:
    return {p: i for i, p in enumerate(_parts_cached(kind, n))}


def part_index(space: OutputSpace, part: Part) -> int:
    """Dense index of a part; raises IllegalPart for excluded pairs."""
    idx = _index_cached(space.kind, space.n).get(_normalize_part(space, part))
    if idx is None:
        raise IllegalPart(f"{part!r} is not a part of {space.kind.value} n={space.n}")
    return idx


def part_of_index(space: OutputSpace, index: int) -> Part:
    parts = space.parts()
    if not 0 <= index < len(parts):
        raise IllegalPart(f"index {index} out of range for |C|={len(parts)}")
    return parts[index]


def _normalize_part(space: OutputSpace, part) -> Part:
    if not isinstance(part, (tuple, list)) or len(part) != 2:
        raise IllegalPart(f"malformed part {part!r}")
    a, b = part
    if space.kind is SpaceKind.BIO:
        if not isinstance(a, int) or not isinstance(b, str):
            raise IllegalPart(f"BIO part must be (position, tag), got {part!r}")
        return (a, b)
    if not isinstance(a, int) or not isinstance(b, int):
        raise IllegalPart(f"dependency part must be (head, modifier), got {part!r}")
    return (a, b)


@dataclass(frozen=True)
class OutputVector:
    """One y in Y, stored as the sorted tuple of selected part indices."""

    space: OutputSpace
    indices: tuple[int, ...]

    def __post_init__(self):
        c = self.space.num_parts
        if any(not 0 <= i < c for i in self.indices):
            raise DimensionMismatch(
                f"part index out of range for |C|={c}: {self.indices}"
            )
        if tuple(sorted(set(self.indices))) != self.indices:
            raise ValueError(f"indices must be sorted and distinct: {self.indices}")

    @classmethod
    def from_parts(cls, space: OutputSpace, parts) -> "OutputVector":
        return cls(space, tuple(sorted(part_index(space, p) for p in parts)))

    def part_ids(self) -> tuple[Part, ...]:
        all_parts = self.space.parts()
        return tuple(all_parts[i] for i in self.indices)

    def rank_key(self) -> int:
        """Dense bit pattern as an integer, most significant bit = index 0.

        Enumeration sorts by this key descending, i.e. outputs selecting
        earlier parts come first.
        """
        c = self.space.num_parts
        key = 0
        for i in self.indices:
            key |= 1 << (c - 1 - i)
        return key

    def bio_tags(self) -> tuple[str, ...]:
        """Tag sequence (requires a valid BIO output)."""
        if self.space.kind is not SpaceKind.BIO:
            raise ValueError("bio_tags on a non-BIO output")
        by_pos: dict[int, str] = {}
        for pos, tag in self.part_ids():  # type: ignore[misc]
            by_pos[pos] = tag
        return tuple(by_pos[i] for i in range(1, self.space.n + 1))

    def arcs(self) -> tuple[tuple[int, int], ...]:
        """(head, modifier) pairs (requires a dependency output)."""
        if not self.space.kind.is_dep:
            raise ValueError("arcs on a non-dependency output")
        return self.part_ids()  # type: ignore[return-value]


def bio_sequence(space: OutputSpace, tags) -> OutputVector:
    """OutputVector for a full tag sequence like ("B", "I")."""
    tags = tuple(tags)
    if len(tags) != space.n:
        raise DimensionMismatch(f"expected {space.n} tags, got {len(tags)}")
    return OutputVector.from_parts(space, [(i + 1, t) for i, t in enumerate(tags)])


def dep_tree(space: OutputSpace, arcs) -> OutputVector:
    """OutputVector for a set of (head, modifier) arcs."""
    return OutputVector.from_parts(space, list(arcs))


def is_valid(space: OutputSpace, y: OutputVector) -> bool:
    """Membership test for y in this space's output family."""
    if y.space != space:
        raise DimensionMismatch(
            f"output built for {y.space.kind.value} n={y.space.n}, "
            f"checked against {space.kind.value} n={space.n}"
        )
    if space.kind is SpaceKind.BIO:
        return _is_valid_bio(space, y)
    return _is_valid_dep(space, y)


def _is_valid_bio(space: OutputSpace, y: OutputVector) -> bool:
    n = space.n
    tags_by_pos: dict[int, list[str]] = {i: [] for i in range(1, n + 1)}
    for pos, tag in y.part_ids():  # type: ignore[misc]
        tags_by_pos[pos].append(tag)
    # exactly one tag per position
    if any(len(ts) != 1 for ts in tags_by_pos.values()):
        return False
    seq = [tags_by_pos[i][0] for i in range(1, n + 1)]
    # I only after B or I; (1, I) is unrepresentable so i starts at 2
    for i in range(1, n):
        if seq[i] == "I" and seq[i - 1] not in ("B", "I"):
            return False
    return True


def _is_valid_dep(space: OutputSpace, y: OutputVector) -> bool:
    n = space.n
    head_of: dict[int, int] = {}
    for head, mod in y.arcs():
        if mod in head_of:
            return False
        head_of[mod] = head
    if len(head_of) != n:
        return False
    # every word must reach 0 by following heads; in-degree one makes this
    # equivalent to acyclicity
    for start in range(1, n + 1):
        node = start
        steps = 0
        while node != 0:
            node = head_of[node]
            steps += 1
            if steps > n:
                return False
    if space.kind is SpaceKind.DEP_SINGLE:
        if sum(1 for h in head_of.values() if h == 0) != 1:
            return False
    return True


def enumerate_outputs(
    space: OutputSpace, cap: int | None = None
) -> tuple[OutputVector, ...]:
    """All of Y, sorted by descending dense bit pattern.

    The order is part of the contract: reports and tie-breaking both refer
    to "the first output in enumeration order".
    """
    cap = space.default_cap() if cap is None else cap
    if space.n > cap:
        raise SpaceTooLarge(
            f"n={space.n} exceeds the enumeration cap {cap} for {space.kind.value}"
        )
    return _enumerate_cached(space.kind, space.n)


@lru_cache(maxsize=None)
def _enumerate_cached(kind: SpaceKind, n: int) -> tuple[OutputVector, ...]:
    space = OutputSpace(kind, n)
    if kind is SpaceKind.BIO:
        outs = [
            bio_sequence(space, seq)
            for seq in itertools.product(TAGS, repeat=n)
            if _tags_ok(seq)
        ]
    else:
        outs = []
        # one head choice per modifier; filter to arborescences
        choices = [[h for h in range(0, n + 1) if h != m] for m in range(1, n + 1)]
        for heads in itertools.product(*choices):
            y = dep_tree(space, [(h, m + 1) for m, h in enumerate(heads)])
            if _is_valid_dep(space, y):
                outs.append(y)
    outs.sort(key=lambda y: y.rank_key(), reverse=True)
    return tuple(outs)


def _tags_ok(seq: tuple[str, ...]) -> bool:
    if seq[0] == "I":
        return False
    return all(seq[i] != "I" or seq[i - 1] in ("B", "I") for i in range(1, len(seq)))
