"""Staircase Markov chains built from marginal sequences.

A staircase path ``s_0, s_1, ...`` has ``s_N`` in ``[0, N]`` and either stays
put or jumps to the new top state: ``s_{N+1}`` is ``s_N`` or ``N + 1``.  Given
a marginal sequence ``nu`` the Markov staircase with those marginals holds at
``s`` with probability ``nu_{N+1}(s) / nu_N(s)`` and otherwise jumps.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .kernels import ONE, ZERO, Balayage, LevelDistribution, MarginalSequence, validate_vid
from .rng import replicate_stream, uniform_block


class InternalUnreachableState(RuntimeError):
    """The sampler occupied a state outside the support of the marginals."""


class ConditioningEventUnobserved(ValueError):
    """No sample realizes the conditioning event."""


@dataclass(frozen=True)
class StaircasePrefix:
    entries: tuple[int, ...]

    def __post_init__(self):
        e = tuple(int(x) for x in self.entries)
        object.__setattr__(self, "entries", e)
        for n, s in enumerate(e):
            if not 0 <= s <= n:
                raise ValueError(f"s_{n} = {s} outside [0, {n}]")
            if n and s not in (e[n - 1], n):
                raise ValueError(f"s_{n} = {s} breaks the staircase constraint after s_{n - 1} = {e[n - 1]}")

    @property
    def top(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, n: int) -> int:
        return self.entries[n]

    def __len__(self) -> int:
        return len(self.entries)


def is_staircase(entries: Sequence[int], start: int = 0) -> bool:
    """Staircase check for a run of levels ``start, start+1, ...``."""
    for i, s in enumerate(entries):
        n = start + i
        if not 0 <= s <= n:
            return False
        if i and s != entries[i - 1] and s != n:
            return False
    return True


class SmcKernel:
    """Hold/jump probabilities of the Markov staircase with marginals ``nu``."""

    def __init__(self, marginals: MarginalSequence):
        bad = validate_vid(marginals)
        if bad:
            raise ValueError(f"marginals are not monotone: {bad[0].detail}")
        self.marginals = marginals
        self.top = marginals.top
        self._float_hold: list[np.ndarray] | None = None

    def hold(self, n: int, s: int) -> Fraction:
        """``P(S_{n+1} = s | S_n = s)``."""
        den = self.marginals[n][s]
        if not den:
            raise InternalUnreachableState(f"state {s} has zero mass at level {n}")
        return self.marginals[n + 1][s] / den

    def jump(self, n: int, s: int) -> Fraction:
        return 1 - self.hold(n, s)

    def float_holds(self) -> list[np.ndarray]:
        """Per-level arrays of hold probabilities; NaN marks zero-mass states."""
        if self._float_hold is None:
            out = []
            for n in range(self.top):
                h = np.full(n + 1, np.nan)
                for s, x in enumerate(self.marginals[n].weights):
                    if x:
                        h[s] = float(self.marginals[n + 1][s] / x)
                out.append(h)
            self._float_hold = out
        return self._float_hold


def _run(kernel: SmcKernel, top: int, u: np.ndarray) -> np.ndarray:
    """Vectorized staircase recursion driven by uniforms ``u`` of shape (R, top)."""
    holds = kernel.float_holds()
    R = u.shape[0]
    out = np.zeros((R, top + 1), dtype=np.int64)
    s = np.zeros(R, dtype=np.int64)
    for n in range(top):
        h = holds[n][s]
        if np.isnan(h).any():
            bad = int(s[np.isnan(h)][0])
            raise InternalUnreachableState(f"sampler reached state {bad} with zero mass at level {n}")
        s = np.where(u[:, n] < h, s, n + 1)
        out[:, n + 1] = s
    return out


def sample_staircase(kernel: SmcKernel, top: int, seed: int, replicate: int = 0) -> StaircasePrefix:
    """One staircase through level ``top``; uses the stream for ``(seed, replicate)``."""
    if top > kernel.top:
        raise ValueError(f"marginals only reach level {kernel.top}")
    u = replicate_stream(seed, replicate).random(top)[None, :]
    return StaircasePrefix(tuple(_run(kernel, top, u)[0]))


def sample_staircases(kernel: SmcKernel, top: int, replicates: int, seed: int, first: int = 0) -> np.ndarray:
    """Array of shape ``(replicates, top + 1)``; row ``i`` is replicate ``first + i``."""
    if top > kernel.top:
        raise ValueError(f"marginals only reach level {kernel.top}")
    u = uniform_block(seed, range(first, first + replicates), top)
    return _run(kernel, top, u)


def point_marginals(s: StaircasePrefix) -> MarginalSequence:
    """Marginals of the deterministic staircase ``s``: level N is ``delta_{s_N}``."""
    return MarginalSequence(tuple(LevelDistribution.point(n, x) for n, x in enumerate(s.entries)))


def _as_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        arr = samples
    else:
        rows = [s.entries if isinstance(s, StaircasePrefix) else tuple(s) for s in samples]
        if not rows:
            raise ValueError("no samples")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("samples have different lengths")
        arr = np.asarray(rows, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("samples must be a nonempty 2-d collection")
    return arr


@dataclass(frozen=True)
class EmpiricalMarginals:
    frequencies: tuple[np.ndarray, ...]
    tv: tuple[float, ...] | None
    count: int

    @property
    def max_tv(self) -> float:
        return max(self.tv) if self.tv else 0.0


def empirical_marginals(samples, reference: MarginalSequence | None = None) -> EmpiricalMarginals:
    """Per-level frequency vectors and, with a reference, TV distances to it."""
    arr = _as_array(samples)
    R, width = arr.shape
    freqs = tuple(np.bincount(arr[:, n], minlength=n + 1)[: n + 1] / R for n in range(width))
    tv = None
    if reference is not None:
        if reference.top < width - 1:
            raise ValueError("reference is shorter than the samples")
        tv = tuple(
            0.5 * float(np.abs(freqs[n] - np.array([float(x) for x in reference[n].weights])).sum())
            for n in range(width)
        )
    return EmpiricalMarginals(freqs, tv, R)


@dataclass(frozen=True)
class BackwardCheck:
    level: int
    conditional: np.ndarray
    tv: float
    count: int


def backward_check(samples, pi: Balayage, n: int) -> BackwardCheck:
    """Empirical law of ``S_n`` given ``S_{n+1} = n+1`` against ``pi_n``."""
    arr = _as_array(samples)
    if arr.shape[1] < n + 2:
        raise ValueError(f"samples stop before level {n + 1}")
    mask = arr[:, n + 1] == n + 1
    count = int(mask.sum())
    if not count:
        raise ConditioningEventUnobserved(f"no sample jumps to {n + 1} at level {n + 1}")
    cond = np.bincount(arr[mask, n], minlength=n + 1)[: n + 1] / count
    ref = np.array([float(x) for x in pi.row(n).weights])
    return BackwardCheck(n, cond, 0.5 * float(np.abs(cond - ref).sum()), count)


# ---------------------------------------------------------------------------
# Exact enumeration


def path_law(kernel: SmcKernel, top: int) -> dict[tuple[int, ...], Fraction]:
    """Exact law of ``(S_0, ..., S_top)``; at most ``2**top`` staircases."""
    if top > kernel.top:
        raise ValueError(f"marginals only reach level {kernel.top}")
    law = {(0,): ONE}
    for n in range(top):
        nxt: dict[tuple[int, ...], Fraction] = {}
        for path, p in law.items():
            s = path[-1]
            h = kernel.hold(n, s)
            if h:
                nxt[path + (s,)] = p * h
            if h != 1:
                nxt[path + (n + 1,)] = p * (1 - h)
        law = nxt
    return law


def law_marginals(law: dict[tuple[int, ...], Fraction], top: int) -> list[list[Fraction]]:
    out = [[ZERO] * (n + 1) for n in range(top + 1)]
    for path, p in law.items():
        for n, s in enumerate(path):
            out[n][s] += p
    return out


def law_backward_conditional(law: dict[tuple[int, ...], Fraction], n: int) -> list[Fraction] | None:
    """Exact ``P(S_n = . | S_{n+1} = n+1)``, or None when the event is null."""
    num = [ZERO] * (n + 1)
    for path, p in law.items():
        if path[n + 1] == n + 1:
            num[path[n]] += p
    tot = sum(num)
    if not tot:
        return None
    return [x / tot for x in num]


def all_staircases(top: int) -> Iterable[tuple[int, ...]]:
    """Every staircase prefix through level ``top``."""
    for jumps in itertools.product((False, True), repeat=top):
        s = [0]
        for n, j in enumerate(jumps):
            s.append(n + 1 if j else s[-1])
        yield tuple(s)
