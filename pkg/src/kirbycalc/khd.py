"""KHD v1 text format: line-based serialization of decorated diagrams.

Grammar (one record per line, ``#`` starts a comment, blank lines ignored)::

    khd v1
    handles 3h=<n> 4h=<n>
    comp <id> dotted orient=<+|->
    comp <id> framed <int> orient=<+|->
    comp <id> plain orient=<+|->
    arc <id> comp=<compid>            # listed in cyclic component order
    x <id> sign=<+|-> over=<arc>.<end> under=<arc>.<end> rot=<e1,e2,e3,e4>
    box <id> turns=<int> strands=<arc>,<arc>
    thru <dotted-id> <framed-id> <int>
    mark <label> comp=<compid>
    mark <label> path=<arc>[:+|:-],<arc>[:+|:-],...
    endp NW=<arc> NE=<arc> SW=<arc> SE=<arc>

The ``rot`` field lists the four arc ends counterclockwise starting at the
over strand's incoming end; it is redundant given the sign and the arc order
and is cross-checked on parse.  ``endp`` values may carry an explicit
``.0``/``.1`` suffix; it is required only when a single-arc open strand makes
the free end ambiguous.  Parsing rejects the whole input on any error and
reports the offending line number.

``emit`` is deterministic: records appear in stored order (arcs grouped under
their component), ``thru`` rows sorted, and ``parse(emit(d))`` reproduces the
diagram exactly - same ids, same order.
"""

from __future__ import annotations

import re
from typing import Optional

from .diagram import (
    ENDPOINT_CORNERS,
    Component,
    Crossing,
    Diagram,
    DiagramError,
    End,
    MarkedCurve,
    TwistBox,
)

__all__ = ["KHDParseError", "parse_khd", "emit_khd"]


class KHDParseError(DiagramError):
    """Malformed KHD text; ``line`` is the 1-based offending line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


_ID = r"[A-Za-z_][A-Za-z0-9_'*-]*"
_RE_ID = re.compile(rf"^{_ID}$")


def _check_id(line: int, token: str, what: str) -> str:
    if not _RE_ID.match(token):
        raise KHDParseError(line, f"bad {what} identifier {token!r}")
    return token


def _parse_sign(line: int, text: str) -> int:
    if text == "+":
        return 1
    if text == "-":
        return -1
    raise KHDParseError(line, f"bad sign {text!r} (want + or -)")


def _parse_int(line: int, text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise KHDParseError(line, f"bad {what} {text!r}") from None


def _kv(line: int, token: str, key: str) -> str:
    if not token.startswith(key + "="):
        raise KHDParseError(line, f"expected {key}=..., got {token!r}")
    return token[len(key) + 1 :]


def parse_khd(text: str) -> Diagram:
    """Parse KHD v1 text into a validated :class:`Diagram`."""
    comps: dict[str, dict] = {}
    comp_order: list[str] = []
    arcs_of: dict[str, list[str]] = {}
    arc_seen: dict[str, int] = {}
    crossings: list[tuple[int, str, int, End, End, list[End]]] = []
    boxes: list[TwistBox] = []
    thru: dict[tuple[str, str], int] = {}
    marks: list[MarkedCurve] = []
    endp_raw: Optional[tuple[int, dict[str, str]]] = None
    handles: Optional[tuple[int, int]] = None
    saw_header = False

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0]
        if not saw_header:
            if tok != ["khd", "v1"]:
                raise KHDParseError(ln, "first record must be 'khd v1'")
            saw_header = True
            continue
        if kw == "khd":
            raise KHDParseError(ln, "duplicate header")
        elif kw == "handles":
            if handles is not None:
                raise KHDParseError(ln, "duplicate handles record")
            if len(tok) != 3:
                raise KHDParseError(ln, "handles record needs 3h=<n> 4h=<n>")
            h3 = _parse_int(ln, _kv(ln, tok[1], "3h"), "3-handle count")
            h4 = _parse_int(ln, _kv(ln, tok[2], "4h"), "4-handle count")
            handles = (h3, h4)
        elif kw == "comp":
            if len(tok) < 3:
                raise KHDParseError(ln, "comp record too short")
            cid = _check_id(ln, tok[1], "component")
            if cid in comps:
                raise KHDParseError(ln, f"duplicate component {cid}")
            kind = tok[2]
            rest = tok[3:]
            framing: Optional[int] = None
            if kind == "framed":
                if not rest:
                    raise KHDParseError(ln, f"framed component {cid} needs a framing")
                framing = _parse_int(ln, rest[0], "framing")
                rest = rest[1:]
            elif kind not in ("dotted", "plain"):
                raise KHDParseError(ln, f"unknown component kind {kind!r}")
            orient = 1
            if rest:
                if len(rest) != 1:
                    raise KHDParseError(ln, "trailing tokens on comp record")
                orient = _parse_sign(ln, _kv(ln, rest[0], "orient"))
            comps[cid] = {"kind": kind, "framing": framing, "orient": orient}
            comp_order.append(cid)
        elif kw == "arc":
            if len(tok) != 3:
                raise KHDParseError(ln, "arc record needs <id> comp=<compid>")
            aid = _check_id(ln, tok[1], "arc")
            if aid in arc_seen:
                raise KHDParseError(ln, f"duplicate arc {aid}")
            cid = _kv(ln, tok[2], "comp")
            if cid not in comps:
                raise KHDParseError(ln, f"arc {aid} references unknown component {cid}")
            arc_seen[aid] = ln
            arcs_of.setdefault(cid, []).append(aid)
        elif kw == "x":
            if len(tok) != 6:
                raise KHDParseError(
                    ln, "x record needs <id> sign= over= under= rot="
                )
            xid = _check_id(ln, tok[1], "crossing")
            sign = _parse_sign(ln, _kv(ln, tok[2], "sign"))
            try:
                over = End.parse(_kv(ln, tok[3], "over"))
                under = End.parse(_kv(ln, tok[4], "under"))
                rot = [End.parse(p) for p in _kv(ln, tok[5], "rot").split(",")]
            except DiagramError as e:
                raise KHDParseError(ln, str(e)) from None
            if len(rot) != 4:
                raise KHDParseError(ln, "rot needs exactly four arc ends")
            crossings.append((ln, xid, sign, over, under, rot))
        elif kw == "box":
            if len(tok) not in (4, 5):
                raise KHDParseError(ln, "box record needs <id> turns= strands= [dir=]")
            bid = _check_id(ln, tok[1], "box")
            turns = _parse_int(ln, _kv(ln, tok[2], "turns"), "turns")
            strands = _kv(ln, tok[3], "strands").split(",")
            if len(strands) != 2:
                raise KHDParseError(ln, "a box carries exactly two strands")
            anti = False
            if len(tok) == 5:
                dirv = _kv(ln, tok[4], "dir")
                if dirv not in ("par", "anti"):
                    raise KHDParseError(ln, f"bad dir {dirv!r} (want par or anti)")
                anti = dirv == "anti"
            try:
                boxes.append(TwistBox(bid, turns, (strands[0], strands[1]), anti))
            except DiagramError as e:
                raise KHDParseError(ln, str(e)) from None
        elif kw == "thru":
            if len(tok) != 4:
                raise KHDParseError(ln, "thru record needs <dotted> <framed> <n>")
            d, f = tok[1], tok[2]
            n = _parse_int(ln, tok[3], "pass-through count")
            if (d, f) in thru:
                raise KHDParseError(ln, f"duplicate thru record {d} {f}")
            thru[(d, f)] = n
        elif kw == "mark":
            if len(tok) != 3:
                raise KHDParseError(ln, "mark record needs <label> comp=|path=")
            label = tok[1]
            if tok[2].startswith("comp="):
                marks.append(MarkedCurve(label, comp=_kv(ln, tok[2], "comp")))
            elif tok[2].startswith("path="):
                path = tuple(_kv(ln, tok[2], "path").split(","))
                if not all(path):
                    raise KHDParseError(ln, "empty arc in mark path")
                try:
                    marks.append(MarkedCurve(label, path=path))
                except DiagramError as e:
                    raise KHDParseError(ln, str(e)) from None
            else:
                raise KHDParseError(ln, "mark needs comp= or path=")
        elif kw == "endp":
            if endp_raw is not None:
                raise KHDParseError(ln, "duplicate endp record")
            if len(tok) != 5:
                raise KHDParseError(ln, "endp record needs NW= NE= SW= SE=")
            vals: dict[str, str] = {}
            for t, corner in zip(tok[1:], ENDPOINT_CORNERS):
                vals[corner] = _kv(ln, t, corner)
            endp_raw = (ln, vals)
        else:
            raise KHDParseError(ln, f"unknown record {kw!r}")

    if not saw_header:
        raise KHDParseError(1, "empty input (missing 'khd v1' header)")

    for cid in comp_order:
        if cid not in arcs_of:
            raise KHDParseError(1, f"component {cid} has no arcs")
    for aid, ln in arc_seen.items():
        pass

    components = [
        Component(
            cid,
            comps[cid]["kind"],
            comps[cid]["framing"],
            comps[cid]["orient"],
            tuple(arcs_of[cid]),
        )
        for cid in comp_order
    ]

    # resolve endpoints: free ends implied by path position, explicit
    # suffixes required only for ambiguity (single-arc open strands)
    endpoints: Optional[dict[str, End]] = None
    if endp_raw is not None:
        ln, vals = endp_raw
        open_arcs = {a for a in (v.split(".")[0] for v in vals.values())}
        first_last: dict[str, tuple[bool, bool]] = {}
        for c in components:
            if any(a in open_arcs for a in c.arcs):
                for a in c.arcs:
                    first_last[a] = (a == c.arcs[0], a == c.arcs[-1])
        endpoints = {}
        for corner, v in vals.items():
            if "." in v:
                try:
                    e = End.parse(v)
                except DiagramError as err:
                    raise KHDParseError(ln, str(err)) from None
            else:
                if v not in arc_seen:
                    raise KHDParseError(ln, f"endp references unknown arc {v}")
                fl = first_last.get(v)
                if fl is None:
                    raise KHDParseError(ln, f"endp arc {v} not on an open strand")
                first, last = fl
                if first and last:
                    raise KHDParseError(
                        ln, f"endp arc {v} is ambiguous; use {v}.0 or {v}.1"
                    )
                if first:
                    e = End(v, 0)
                elif last:
                    e = End(v, 1)
                else:
                    raise KHDParseError(ln, f"endp arc {v} has no free end")
            endpoints[corner] = e

    h3, h4 = handles if handles is not None else (0, 0)

    xrecs = []
    for ln, xid, sign, over, under, rot in crossings:
        for e in (over, under, *rot):
            if e.arc not in arc_seen:
                raise KHDParseError(ln, f"crossing {xid} references unknown arc {e.arc}")
        if over.end != 1 or under.end != 1:
            raise KHDParseError(
                ln, f"crossing {xid}: over=/under= must reference incoming head ends"
            )
        xrecs.append((ln, Crossing(xid, sign, over, under), rot))

    for b in boxes:
        for a in b.strands:
            if a not in arc_seen:
                raise KHDParseError(1, f"box {b.id} references unknown arc {a}")

    try:
        d = Diagram(
            components,
            [x for _, x, _ in xrecs],
            boxes,
            h3,
            h4,
            thru,
            marks,
            endpoints,
        )
    except KHDParseError:
        raise
    except DiagramError as e:
        raise KHDParseError(1, str(e)) from None

    # cross-check the redundant rot fields (any cyclic rotation accepted)
    for ln, x, rot in xrecs:
        want = list(d.crossing_rotation(d.crossings[x.id]))
        ok = any(rot[i:] + rot[:i] == want for i in range(4))
        if not ok:
            raise KHDParseError(
                ln,
                f"crossing {x.id}: rot inconsistent with sign and arc order "
                f"(expected cyclic {','.join(map(str, want))})",
            )
    return d


def emit_khd(d: Diagram) -> str:
    """Serialize a diagram to canonical KHD v1 text."""
    out: list[str] = ["khd v1", f"handles 3h={d.three_handles} 4h={d.four_handles}"]
    for c in d.components.values():
        orient = "+" if c.orient > 0 else "-"
        if c.kind == "framed":
            out.append(f"comp {c.id} framed {c.framing} orient={orient}")
        else:
            out.append(f"comp {c.id} {c.kind} orient={orient}")
        for a in c.arcs:
            out.append(f"arc {a} comp={c.id}")
    for x in d.crossings.values():
        sign = "+" if x.sign > 0 else "-"
        rot = ",".join(str(e) for e in d.crossing_rotation(x))
        out.append(
            f"x {x.id} sign={sign} over={x.over_in} under={x.under_in} rot={rot}"
        )
    for b in d.boxes.values():
        rec = f"box {b.id} turns={b.turns} strands={b.strands[0]},{b.strands[1]}"
        if b.anti:
            rec += " dir=anti"
        out.append(rec)
    for (dc, fc) in sorted(d.thru):
        out.append(f"thru {dc} {fc} {d.thru[(dc, fc)]}")
    for m in d.marks:
        if m.comp is not None:
            out.append(f"mark {m.label} comp={m.comp}")
        else:
            out.append(f"mark {m.label} path={','.join(m.path)}")
    if d.endpoints is not None:
        parts = []
        for corner in ENDPOINT_CORNERS:
            e = d.endpoints[corner]
            comp = d.components[d.component_of(e.arc)]
            ambiguous = len(comp.arcs) == 1
            parts.append(f"{corner}={e if ambiguous else e.arc}")
        out.append("endp " + " ".join(parts))
    return "\n".join(out) + "\n"
