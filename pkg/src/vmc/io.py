"""File formats: model specs, VID specs, path prefixes, CSV and atomic writes.

Rationals are always written as ``"p/q"`` strings.  CSV files carry an extra
decimal column (12 significant digits) next to every rational column.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .families import balayage_facts, vtm_from_spec
from .kernels import (
    Balayage,
    MarginalSequence,
    ModelError,
    VTMPrefix,
    as_fraction,
    fraction_str,
)
from .levels import LevelPath, VirtualPathPrefix
from .simplex import materialize
from .tags import DeltaPoint, LimitPoint, Mixture, Row, Zero, tag_to_json


def read_json(path: str | os.PathLike):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from None


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def decimal(x: Fraction) -> str:
    return f"{float(x):.12g}"


def csv_text(header: Sequence[str], rows: Iterable[Sequence], rational: Sequence[str] = ()) -> str:
    """CSV with a ``<name>_dec`` column after each column named in ``rational``."""
    rational = set(rational)
    cols = []
    for h in header:
        cols.append(h)
        if h in rational:
            cols.append(f"{h}_dec")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        out = []
        for h, v in zip(header, r):
            if h in rational:
                out += [fraction_str(v), decimal(v)]
            else:
                out.append(v)
        w.writerow(out)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Models


def load_model(path) -> VTMPrefix:
    return vtm_from_spec(read_json(path))


# ---------------------------------------------------------------------------
# VIDs


def tag_from_json(spec: dict, pi: Balayage | None = None):
    """Inverse of :func:`vmc.tags.tag_to_json`.

    A limit given only by label is completed from the catalog facts of ``pi``.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ModelError("a tag must be an object with a 'kind' key")
    kind = spec["kind"]
    if kind == "zero":
        return Zero()
    if kind == "delta":
        return DeltaPoint(_nonneg(spec, "a"))
    if kind == "row":
        return Row(_nonneg(spec, "a"))
    if kind == "limit":
        label = spec.get("label")
        if "modulus" in spec:
            return LimitPoint(label, int(spec["modulus"]), int(spec.get("residue", 0)))
        facts = balayage_facts(pi) if pi is not None else None
        for t in facts.limits if facts else ():
            if t.label == label:
                return t
        raise ModelError(f"unknown limit point {label!r} for this model")
    if kind == "mixture":
        comps = spec.get("components")
        if not comps:
            raise ModelError("mixture needs components")
        try:
            return Mixture(tuple((as_fraction(c["weight"]), tag_from_json(c["tag"], pi)) for c in comps))
        except ValueError as exc:
            raise ModelError(str(exc)) from None
    raise ModelError(f"unknown VID kind {kind!r}")


def _nonneg(spec: dict, key: str) -> int:
    try:
        v = int(spec[key])
    except (KeyError, TypeError, ValueError):
        raise ModelError(f"VID spec needs an integer {key!r}") from None
    if v < 0:
        raise ModelError(f"{key!r} must be nonnegative")
    return v


def vid_from_spec(spec: dict, K: VTMPrefix, top: int) -> MarginalSequence:
    """Materialize a VID spec through level ``top`` against the balayage of ``K``."""
    if isinstance(spec, dict) and spec.get("kind") == "explicit":
        nu = MarginalSequence.from_json(spec["levels"])
        if nu.top < top:
            raise ModelError(f"explicit VID only reaches level {nu.top}, need {top}")
        return nu.truncate(top)
    pi = Balayage.of_vtm(K)
    tag = tag_from_json(spec, pi)
    return materialize(tag, pi, top, K)


def vid_to_spec(nu: MarginalSequence) -> dict:
    if nu.tag is not None:
        return tag_to_json(nu.tag)
    return {"kind": "explicit", "levels": nu.to_json()}


def load_vid(path, K: VTMPrefix, top: int) -> MarginalSequence:
    return vid_from_spec(read_json(path), K, top)


# ---------------------------------------------------------------------------
# Paths


def path_to_json(p: LevelPath) -> dict:
    entries = [p.entry(i) for i in range(p.horizon)]
    return {"level": p.level, "entries": entries, "determined_len": p.determined_len}


def path_from_json(d: dict) -> LevelPath:
    """Inverse of :func:`path_to_json`.

    ``determined_len`` counts the stored states; entries after them must be
    null, or 0 when the stored states already hit 0.
    """
    try:
        level = int(d["level"])
        entries = list(d["entries"])
    except (KeyError, TypeError, ValueError):
        raise ModelError("path object needs 'level' and 'entries'") from None
    lead = 0
    while lead < len(entries) and entries[lead] is not None:
        lead += 1
    det = int(d.get("determined_len", lead))
    if not 0 <= det <= lead:
        raise ModelError(f"level {level}: determined_len {det} does not fit the entries")
    try:
        states = tuple(int(x) for x in entries[:det])
    except (TypeError, ValueError):
        raise ModelError(f"level {level}: entries must be integers or null") from None
    tail = entries[det:]
    absorbed = 0 in states
    if any(x is not None and not (absorbed and x == 0) for x in tail):
        raise ModelError(f"level {level}: entries past determined_len must be null")
    try:
        return LevelPath(level, states, len(entries))
    except ValueError as exc:
        raise ModelError(f"level {level}: {exc}") from None


def prefix_from_json(data) -> VirtualPathPrefix:
    """Accepts a list of path objects (levels 0..L) or ``{"paths": [...]}``."""
    if isinstance(data, dict):
        data = data.get("paths")
    if not isinstance(data, list) or not data:
        raise ModelError("expected a nonempty list of path objects")
    paths = sorted((path_from_json(d) for d in data), key=lambda p: p.level)
    try:
        return VirtualPathPrefix(tuple(paths))
    except ValueError as exc:
        raise ModelError(str(exc)) from None


def prefix_to_json(vp: VirtualPathPrefix) -> list[dict]:
    return [path_to_json(vp[n]) for n in range(vp.top + 1)]
