"""`lorcomp-cset v1` text format and its JSON twin.

Layout (whitespace separated, ``#`` starts a comment)::

    lorcomp-cset v1
    provenance inherited
    ambient minkowski
    meta {"labels": ["x", "y"]}
    points 2
    0 0.0 0.0
    1 1.0 0.0
    links 1
    0 1
    tau 1
    0 1 1.0

``ambient`` and ``meta`` are optional.  The tau section is omitted when tau
is inherited from a named ambient and every point has coordinates; the
loader then recomputes it from the ambient.  When tau is absent and there
is no ambient, the link-count intrinsic tau is used.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import FormatError
from .generators import ambient_from_tag, space_from_points
from .space import DiscreteSpace, Provenance, TauMode, with_intrinsic_tau

HEADER = "lorcomp-cset v1"
JSON_FORMAT = "lorcomp-cset-json v1"


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _tau_needed(sp: DiscreteSpace) -> bool:
    return not (sp.provenance is Provenance.INHERITED and sp.ambient is not None and sp.coords is not None)


def dumps(sp: DiscreteSpace) -> str:
    lines = [HEADER, f"provenance {sp.provenance.value}"]
    if sp.ambient is not None:
        lines.append(f"ambient {sp.ambient}")
    meta = sp.meta
    if meta:
        lines.append("meta " + json.dumps(meta, sort_keys=True))
    lines.append(f"points {sp.n}")
    coords = sp.coords
    for i in range(sp.n):
        if coords is None:
            lines.append(f"{i} -")
        else:
            lines.append(f"{i} {_fmt(coords[i, 0])} {_fmt(coords[i, 1])}")
    links = sp.links
    lines.append(f"links {len(links)}")
    lines.extend(f"{int(i)} {int(j)}" for i, j in links)
    if _tau_needed(sp):
        rows, cols, tau, _ = sp.pairs()
        keep = tau != 0
        lines.append(f"tau {int(keep.sum())}")
        lines.extend(f"{int(i)} {int(j)} {_fmt(v)}" for i, j, v in zip(rows[keep], cols[keep], tau[keep]))
    return "\n".join(lines) + "\n"


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("meta ") else raw.strip()
        if line:
            yield lineno, line


def loads(text: str) -> DiscreteSpace:
    it = iter(_tokens(text))
    try:
        lineno, first = next(it)
    except StopIteration:
        raise FormatError("empty cset file") from None
    if first != HEADER:
        raise FormatError(f"line {lineno}: expected header {HEADER!r}")
    provenance = Provenance.EXPLICIT
    ambient = None
    meta: dict = {}
    n = None
    coords: list = []
    has_coords = True
    links: list = []
    tau_entries = None

    def take(count, what):
        out = []
        for _ in range(count):
            try:
                out.append(next(it))
            except StopIteration:
                raise FormatError(f"{what} section ended early") from None
        return out

    for lineno, line in it:
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if key == "provenance":
                provenance = Provenance(rest)
            elif key == "ambient":
                ambient = rest
            elif key == "meta":
                meta = json.loads(rest)
            elif key == "points":
                n = int(rest)
                for ln, row in take(n, "points"):
                    parts = row.split()
                    if int(parts[0]) != len(coords):
                        raise FormatError(f"line {ln}: point index out of sequence")
                    if parts[1:] == ["-"]:
                        has_coords = False
                        coords.append((math.nan, math.nan))
                    elif len(parts) == 3:
                        coords.append((float(parts[1]), float(parts[2])))
                    else:
                        raise FormatError(f"line {ln}: expected 'index t x' or 'index -'")
            elif key == "links":
                for ln, row in take(int(rest), "links"):
                    i, j = row.split()
                    links.append((int(i), int(j)))
            elif key == "tau":
                tau_entries = []
                for ln, row in take(int(rest), "tau"):
                    i, j, v = row.split()
                    tau_entries.append((int(i), int(j), float(v)))
            else:
                raise FormatError(f"line {lineno}: unknown directive {key!r}")
        except (ValueError, json.JSONDecodeError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from None
    if n is None:
        raise FormatError("missing points section")
    for i, j in links:
        if not (0 <= i < n and 0 <= j < n):
            raise FormatError(f"link ({i}, {j}) out of range")
    pts = np.array(coords, dtype=float).reshape(n, 2) if has_coords else None
    if tau_entries is None and provenance is Provenance.INHERITED and ambient and pts is not None:
        geom = ambient_from_tag(ambient)
        sp = space_from_points(pts, geom, provenance=provenance, meta=meta)
        if set(map(tuple, sp.links.tolist())) != set(links):
            raise FormatError("links disagree with the ambient causal relation")
        return sp
    kw = dict(coords=pts, ambient=ambient, provenance=provenance, meta=meta)
    if tau_entries is None:
        sp = DiscreteSpace.from_links(n, links, None, **kw)
        return with_intrinsic_tau(sp, TauMode.LINK_COUNT)
    return DiscreteSpace.from_links(n, links, tau_entries, **kw)


def save(sp: DiscreteSpace, path) -> None:
    Path(path).write_text(dumps(sp))


def load(path) -> DiscreteSpace:
    return loads(Path(path).read_text())


def to_json(sp: DiscreteSpace) -> dict:
    """Structured export with the same content as the text format."""
    rows, cols, tau, _ = sp.pairs()
    keep = tau != 0
    return {
        "format": JSON_FORMAT,
        "provenance": sp.provenance.value,
        "ambient": sp.ambient,
        "meta": sp.meta,
        "points": None if sp.coords is None else sp.coords.tolist(),
        "n": sp.n,
        "links": sp.links.tolist(),
        "tau": [[int(i), int(j), _fmt(v) if math.isinf(v) else float(v)] for i, j, v in zip(rows[keep], cols[keep], tau[keep])],
    }


def from_json(data: dict) -> DiscreteSpace:
    if data.get("format") != JSON_FORMAT:
        raise FormatError(f"expected format {JSON_FORMAT!r}")
    entries = [(i, j, float(v)) for i, j, v in data["tau"]]
    return DiscreteSpace.from_links(
        int(data["n"]),
        data["links"],
        entries,
        coords=data["points"],
        ambient=data["ambient"],
        provenance=data["provenance"],
        meta=data["meta"],
    )
