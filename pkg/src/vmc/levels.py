"""Path-space primitives for virtual Markov chains.

A level-N path lives in ``[0, N]`` with 0 absorbing.  Paths handled here are
finite prefixes: a run of determined states optionally followed by an
undetermined suffix (the horizon ran out before the value was known).  A path
containing a determined 0 is *absorbed*; every later entry is known to be 0
even beyond the stored prefix.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping


@dataclass(frozen=True)
class LevelPath:
    """Finite prefix of a level-``level`` path.

    ``states`` is the determined prefix.  ``horizon`` is the total length of
    the prefix including the undetermined suffix; it defaults to
    ``len(states)``.
    """

    level: int
    states: tuple[int, ...]
    horizon: int = -1

    def __post_init__(self):
        states = tuple(int(x) for x in self.states)
        object.__setattr__(self, "states", states)
        if self.horizon < 0:
            object.__setattr__(self, "horizon", len(states))
        if self.level < 0:
            raise ValueError(f"negative level {self.level}")
        if self.horizon < len(states):
            raise ValueError("horizon shorter than the determined prefix")
        seen_zero = False
        for i, x in enumerate(states):
            if not 0 <= x <= self.level:
                raise ValueError(f"state {x} at index {i} outside [0, {self.level}]")
            if seen_zero and x != 0:
                raise ValueError(f"nonzero state {x} at index {i} after absorption at 0")
            seen_zero = seen_zero or x == 0

    @property
    def absorbed(self) -> bool:
        return 0 in self.states

    @property
    def determined_len(self) -> int:
        return len(self.states)

    @property
    def complete(self) -> bool:
        """True when no entry of the prefix is undetermined."""
        return self.absorbed or len(self.states) == self.horizon

    def entry(self, i: int) -> int | None:
        """State at index ``i``, or None when it is not determined."""
        if i < len(self.states):
            return self.states[i]
        if self.absorbed:
            return 0
        return None

    def __len__(self) -> int:
        return self.horizon


class HitKind(enum.Enum):
    FOUND = "found"
    NEVER = "never"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class HitResult:
    kind: HitKind
    index: int | None = None

    @property
    def found(self) -> bool:
        return self.kind is HitKind.FOUND


PROVABLY_NEVER = HitResult(HitKind.NEVER)
UNKNOWN_WITHIN_HORIZON = HitResult(HitKind.UNKNOWN)


def hitting_index(path: LevelPath, target: Iterable[int], k: int) -> HitResult:
    """Index of the (k+1)-th visit of ``path`` to ``target`` (k counts from 0)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    target = frozenset(target)
    count = 0
    for i, x in enumerate(path.states):
        if x in target:
            if count == k:
                return HitResult(HitKind.FOUND, i)
            count += 1
    if path.absorbed:
        if 0 in target:
            # zeros continue forever past the stored prefix
            return HitResult(HitKind.FOUND, len(path.states) + (k - count))
        return PROVABLY_NEVER
    return UNKNOWN_WITHIN_HORIZON


def project_path(path: LevelPath, level: int) -> LevelPath:
    """Remove every excursion of ``path`` above ``level``.

    Entries after the last determined visit to ``[0, level]`` are undetermined
    unless the source is absorbed, in which case they are 0.
    """
    if level > path.level:
        raise ValueError(f"cannot project level-{path.level} path to level {level}")
    if level < 0:
        raise ValueError("negative target level")
    if level == 0:
        # the level-0 path is identically 0 whatever happens above
        return LevelPath(0, (0,) * path.horizon, path.horizon)
    sub = tuple(x for x in path.states if x <= level)
    if path.absorbed:
        sub = sub + (0,) * (path.horizon - len(sub))
    return LevelPath(level, sub, path.horizon)


def first_disagreement(p: LevelPath, q: LevelPath) -> int | None:
    """First index where both paths are determined and differ."""
    for i in range(max(len(p.states), len(q.states))):
        x, y = p.entry(i), q.entry(i)
        if x is None or y is None:
            break
        if x != y:
            return i
    return None


@dataclass(frozen=True)
class VirtualPathPrefix:
    """Per-level path prefixes ``X_0, ..., X_L``.

    ``paths[N]`` is the level-N path; the top one must be fully determined.
    """

    paths: tuple[LevelPath, ...]

    def __post_init__(self):
        paths = tuple(self.paths)
        object.__setattr__(self, "paths", paths)
        if not paths:
            raise ValueError("empty virtual path prefix")
        for n, p in enumerate(paths):
            if p.level != n:
                raise ValueError(f"path at position {n} has level {p.level}")
        if not paths[-1].complete:
            raise ValueError("top-level path has undetermined entries")

    @property
    def top(self) -> int:
        return len(self.paths) - 1

    def __getitem__(self, level: int) -> LevelPath:
        return self.paths[level]

    @classmethod
    def from_top(cls, path: LevelPath) -> VirtualPathPrefix:
        """Derive all lower levels from a fully determined top path."""
        return cls(tuple(project_path(path, n) for n in range(path.level)) + (path,))

    @classmethod
    def from_mapping(cls, paths: Mapping[int, LevelPath]) -> VirtualPathPrefix:
        return cls(tuple(paths[n] for n in range(len(paths))))


@dataclass(frozen=True)
class Mismatch:
    lower: int
    upper: int
    index: int


def validate_virtual_prefix(vp: VirtualPathPrefix) -> list[Mismatch]:
    """Check ``P_N(X_{N+1}) = X_N`` on commonly determined entries."""
    report = []
    for n in range(vp.top):
        i = first_disagreement(project_path(vp[n + 1], n), vp[n])
        if i is not None:
            report.append(Mismatch(n, n + 1, i))
    return report
