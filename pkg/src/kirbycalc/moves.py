"""Diagram rewriting: Reidemeister moves, handle slides, blow-ups and
blow-downs, pair cancellation, and the composite moves built from them.

Every operation is a pure function ``Diagram -> Diagram``.  Each one

1. validates the local pattern it needs (raising :class:`DiagramError`
   on a mismatch),
2. rewires a builder copy of the diagram, and
3. certifies the result against the exact bookkeeping the move must
   satisfy: linking-matrix congruence, Euler-characteristic shift, and
   invariance of the first-homology presentations.

A failed certification raises :class:`CertificationError`; a move never
returns a silently wrong picture.

Conventions used by the wiring helpers
--------------------------------------

* Strand directions handed to helpers are *effective* directions: +1
  means the component's effective orientation points "north" through the
  local cell.  Stored crossing signs are derived by multiplying with the
  component's ``orient`` flag.
* A circle produced by ``blow`` or the pair moves is drawn clockwise:
  it passes over the encircled strands on one side and under them on the
  other, so each pass contributes its direction to the linking number.
* A full right-handed twist (``turns = +1``) on strands with effective
  directions ``d_i`` changes the linking number of lanes ``i`` and ``j``
  by ``d_i * d_j`` per turn.
* Band gates: the band passes *over* every gated arc.  The ``side``
  token fixes the stored sign of the first band edge's crossing on that
  arc (``left`` = +1, ``right`` = -1); the returning edge gets the
  opposite sign.  Planarity validation rejects geometrically impossible
  bands.

Move scripts
------------

One move per line, blank lines and ``#`` comments ignored::

    r1 insert arc=a3 sign=+1 over=loop
    r1 remove x=x2
    r2 insert over=a1 under=b4
    r2 remove x=x1 y=x5
    r3 x=x1 y=x2 z=x3
    slide target=h1 over=h2 orient=+1 band=t2/g4.l/o1
    blow up sign=+1 around=a1,a2:- name=e1
    blow down comp=e1 sign=+1
    cancel dotted=d1 handle=h3
    add23 gamma=g band=-
    delta gamma=g sign=+1 band=-
    dslide zero=z1 over=v2
    cp2 merge plus=p v1=w1 v2=w2
    boxshift box=t1 delta=1

A band is ``start/gate.l/gate.r/…/end``; gates may be empty
(``start/end``).  Moves that only take gates (``add23``, ``delta``)
write just the gate list, or ``-`` for none.  Strand lists (``around=``)
are comma-separated arc tokens, ``arc`` for direction +1 and ``arc:-``
for -1; ``-`` means no strands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .diagram import (
    DOTTED,
    FRAMED,
    Diagram,
    DiagramBuilder,
    DiagramError,
    End,
    path_entry,
    path_step,
)
from .invariants import homology_report, linking_matrix
from .normalize import _contracted, normalize

__all__ = [
    "CertificationError",
    "Band",
    "MoveRecord",
    "MOVE_KINDS",
    "parse_move_script",
    "emit_move_script",
    "apply_move",
    "apply_script",
    "reidemeister",
    "r1_insert",
    "r1_remove",
    "r2_insert",
    "r2_remove",
    "r3_move",
    "boxshift",
    "handle_slide",
    "blow",
    "blow_up",
    "blow_down",
    "cancel_pair",
    "add_23_pair",
    "delta_move",
    "double_slide",
    "cp2_fuse",
]


class CertificationError(RuntimeError):
    """A move's result failed its own exact bookkeeping check."""


MOVE_KINDS = (
    "R1",
    "R2",
    "R3",
    "Slide",
    "BlowUp",
    "BlowDown",
    "CancelPair",
    "Add23Pair",
    "DeltaMove",
    "DoubleSlide",
    "CP2Merge",
    "CP2Split",
    "BoxShift",
)

Entry = tuple[str, int]  # (arc id, effective direction)


# ---------------------------------------------------------------------------
# Bands


@dataclass(frozen=True)
class Band:
    """An embedded corridor along which a slide or splice travels.

    ``start`` names the arc that is cut open on the moving component,
    ``end`` the arc near the stationary one; ``gates`` lists the arcs the
    corridor crosses on its way, in order, each with the side token that
    fixes the crossing sign of the outgoing band edge.
    """

    start: str = ""
    gates: tuple[tuple[str, str], ...] = ()
    end: str = ""

    def __post_init__(self) -> None:
        for g, side in self.gates:
            if side not in ("left", "right"):
                raise DiagramError(f"band gate side must be left/right, got {side!r}")
            if not g:
                raise DiagramError("band gate needs an arc id")

    def text(self, gates_only: bool = False) -> str:
        gates = "/".join(f"{g}.{side[0]}" for g, side in self.gates)
        if gates_only:
            return gates or "-"
        if not self.start or not self.end:
            raise DiagramError("band serialization needs start and end arcs")
        return "/".join(p for p in (self.start, gates, self.end) if p)

    @staticmethod
    def parse(text: str, gates_only: bool = False) -> "Band":
        text = text.strip()
        if gates_only:
            if text in ("", "-"):
                return Band("", (), "")
            return Band("", _parse_gates(text.split("/")), "")
        parts = text.split("/")
        if len(parts) < 2:
            raise DiagramError(f"band needs start/…/end, got {text!r}")
        return Band(parts[0], _parse_gates(parts[1:-1]), parts[-1])


def _parse_gates(tokens: Sequence[str]) -> tuple[tuple[str, str], ...]:
    gates = []
    for tok in tokens:
        if "." not in tok:
            raise DiagramError(f"band gate {tok!r} needs a .l or .r suffix")
        arc, _, side = tok.rpartition(".")
        if side not in ("l", "r") or not arc:
            raise DiagramError(f"band gate {tok!r} needs a .l or .r suffix")
        gates.append((arc, "left" if side == "l" else "right"))
    return tuple(gates)


# ---------------------------------------------------------------------------
# Move records and scripts


@dataclass(frozen=True)
class MoveRecord:
    """One serialized diagram rewrite; ``line()`` gives its script form."""

    kind: str
    args: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if self.kind not in MOVE_KINDS:
            raise DiagramError(f"unknown move kind {self.kind!r}")

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        for k, v in self.args:
            if k == key:
                return v
        return default

    def require(self, key: str) -> str:
        v = self.get(key)
        if v is None:
            raise DiagramError(f"{self.kind} record is missing {key}=")
        return v

    def line(self) -> str:
        verb, fixed = _KIND_VERB[self.kind]
        parts = [verb] + list(fixed)
        for k, v in self.args:
            if k == "op":
                parts.insert(1, v)
            else:
                parts.append(f"{k}={v}")
        return " ".join(parts)


_KIND_VERB: dict[str, tuple[str, tuple[str, ...]]] = {
    "R1": ("r1", ()),
    "R2": ("r2", ()),
    "R3": ("r3", ()),
    "Slide": ("slide", ()),
    "BlowUp": ("blow", ("up",)),
    "BlowDown": ("blow", ("down",)),
    "CancelPair": ("cancel", ()),
    "Add23Pair": ("add23", ()),
    "DeltaMove": ("delta", ()),
    "DoubleSlide": ("dslide", ()),
    "CP2Merge": ("cp2", ("merge",)),
    "CP2Split": ("cp2", ("split",)),
    "BoxShift": ("boxshift", ()),
}


def _parse_sign(text: str, what: str = "sign") -> int:
    if text in ("+", "+1", "1"):
        return 1
    if text in ("-", "-1"):
        return -1
    raise DiagramError(f"{what} must be +1 or -1, got {text!r}")


def _sign_text(s: int) -> str:
    return "+1" if s > 0 else "-1"


def _parse_entries(text: str) -> tuple[Entry, ...]:
    text = text.strip()
    if text in ("", "-"):
        return ()
    out = []
    for tok in text.split(","):
        arc, dr = path_step(tok.strip())
        out.append((arc, dr))
    return tuple(out)


def _entries_text(entries: Iterable[Entry]) -> str:
    toks = [path_entry(a, dr) for a, dr in entries]
    return ",".join(toks) if toks else "-"


def parse_move_line(line: str) -> MoveRecord:
    tokens = line.split()
    if not tokens:
        raise DiagramError("empty move line")
    verb = tokens[0]
    rest = tokens[1:]
    sub = None
    if rest and "=" not in rest[0]:
        sub, rest = rest[0], rest[1:]
    kv = []
    for tok in rest:
        if "=" not in tok:
            raise DiagramError(f"expected key=value, got {tok!r} in {line!r}")
        k, _, v = tok.partition("=")
        kv.append((k, v))
    pairs = dict(kv)
    if len(pairs) != len(kv):
        raise DiagramError(f"duplicate keys in move line {line!r}")

    def need(*keys: str) -> tuple[str, ...]:
        missing = [k for k in keys if k not in pairs]
        if missing:
            raise DiagramError(f"{verb} line is missing {missing[0]}= in {line!r}")
        extra = set(pairs) - set(keys) - _OPTIONAL.get((verb, sub), set())
        if extra:
            raise DiagramError(f"unexpected key {sorted(extra)[0]!r} in {line!r}")
        return tuple(pairs[k] for k in keys)

    if verb == "r1":
        if sub == "insert":
            arc, sign, over = need("arc", "sign", "over")
            if over not in ("approach", "loop"):
                raise DiagramError(f"r1 over= must be approach or loop, got {over!r}")
            return MoveRecord(
                "R1",
                (("op", "insert"), ("arc", arc), ("sign", _sign_text(_parse_sign(sign))), ("over", over)),
            )
        if sub == "remove":
            (x,) = need("x")
            return MoveRecord("R1", (("op", "remove"), ("x", x)))
        raise DiagramError(f"r1 needs insert or remove, got {sub!r}")
    if verb == "r2":
        if sub == "insert":
            over, under = need("over", "under")
            return MoveRecord("R2", (("op", "insert"), ("over", over), ("under", under)))
        if sub == "remove":
            x, y = need("x", "y")
            return MoveRecord("R2", (("op", "remove"), ("x", x), ("y", y)))
        raise DiagramError(f"r2 needs insert or remove, got {sub!r}")
    if verb == "r3":
        if sub is not None:
            raise DiagramError(f"r3 takes no sub-verb, got {sub!r}")
        x, y, z = need("x", "y", "z")
        return MoveRecord("R3", (("x", x), ("y", y), ("z", z)))
    if verb == "slide":
        if sub is not None:
            raise DiagramError(f"slide takes no sub-verb, got {sub!r}")
        target, over, orient, band = need("target", "over", "orient", "band")
        Band.parse(band)
        return MoveRecord(
            "Slide",
            (("target", target), ("over", over), ("orient", _sign_text(_parse_sign(orient, "orient"))), ("band", band)),
        )
    if verb == "blow":
        if sub == "up":
            sign, around = need("sign", "around")
            _parse_entries(around)
            args = [("sign", _sign_text(_parse_sign(sign))), ("around", around)]
            if "name" in pairs:
                args.append(("name", pairs["name"]))
            return MoveRecord("BlowUp", tuple(args))
        if sub == "down":
            comp, sign = need("comp", "sign")
            return MoveRecord("BlowDown", (("comp", comp), ("sign", _sign_text(_parse_sign(sign)))))
        raise DiagramError(f"blow needs up or down, got {sub!r}")
    if verb == "cancel":
        dotted, handle = need("dotted", "handle")
        return MoveRecord("CancelPair", (("dotted", dotted), ("handle", handle)))
    if verb == "add23":
        gamma, band = need("gamma", "band")
        Band.parse(band, gates_only=True)
        return MoveRecord("Add23Pair", (("gamma", gamma), ("band", band)))
    if verb == "delta":
        gamma, sign, band = need("gamma", "sign", "band")
        Band.parse(band, gates_only=True)
        return MoveRecord(
            "DeltaMove",
            (("gamma", gamma), ("sign", _sign_text(_parse_sign(sign))), ("band", band)),
        )
    if verb == "dslide":
        zero, over = need("zero", "over")
        return MoveRecord("DoubleSlide", (("zero", zero), ("over", over)))
    if verb == "cp2":
        if sub not in ("merge", "split"):
            raise DiagramError(f"cp2 needs merge or split, got {sub!r}")
        plus, v1, v2 = need("plus", "v1", "v2")
        kind = "CP2Merge" if sub == "merge" else "CP2Split"
        return MoveRecord(kind, (("plus", plus), ("v1", v1), ("v2", v2)))
    if verb == "boxshift":
        box, delta = need("box", "delta")
        try:
            int(delta)
        except ValueError:
            raise DiagramError(f"boxshift delta= must be an integer, got {delta!r}")
        return MoveRecord("BoxShift", (("box", box), ("delta", delta)))
    raise DiagramError(f"unknown move verb {verb!r}")


_OPTIONAL: dict[tuple[str, Optional[str]], set[str]] = {("blow", "up"): {"name"}}


def parse_move_script(text: str) -> list[MoveRecord]:
    records = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        records.append(parse_move_line(line))
    return records


def emit_move_script(records: Iterable[MoveRecord]) -> str:
    return "".join(rec.line() + "\n" for rec in records)


# ---------------------------------------------------------------------------
# Certification helpers


def _mat(d: Diagram, mode: str) -> tuple[tuple[str, ...], dict[tuple[str, str], int]]:
    lm = linking_matrix(d, mode)
    ent = {}
    for i, ci in enumerate(lm.basis):
        for j, cj in enumerate(lm.basis):
            ent[(ci, cj)] = lm.matrix[i][j]
    return lm.basis, ent


def _certify(cond: bool, what: str) -> None:
    if not cond:
        raise CertificationError(what)


def _certify_matrix(
    after: Diagram,
    mode: str,
    basis: Sequence[str],
    expect: dict[tuple[str, str], int],
    ctx: str,
) -> None:
    lm = linking_matrix(after, mode)
    _certify(
        list(lm.basis) == list(basis),
        f"{ctx}: {mode} basis drifted from {tuple(basis)} to {lm.basis}",
    )
    for i, ci in enumerate(lm.basis):
        for j, cj in enumerate(lm.basis):
            got = lm.matrix[i][j]
            want = expect[(ci, cj)]
            _certify(
                got == want,
                f"{ctx}: linking entry ({ci},{cj}) is {got}, predicted {want}",
            )


def _certify_reports(
    before: Diagram,
    after: Diagram,
    ctx: str,
    euler: int = 0,
    sigma: int = 0,
    strict: bool = True,
) -> None:
    r0, r1 = homology_report(before), homology_report(after)
    _certify(r1.euler == r0.euler + euler, f"{ctx}: euler went {r0.euler} -> {r1.euler}, predicted shift {euler}")
    _certify(r1.h1_manifold == r0.h1_manifold, f"{ctx}: manifold H1 changed {r0.h1_manifold} -> {r1.h1_manifold}")
    _certify(r1.h1_boundary == r0.h1_boundary, f"{ctx}: boundary H1 changed {r0.h1_boundary} -> {r1.h1_boundary}")
    if r0.signature is not None and r1.signature is not None:
        _certify(
            r1.signature == r0.signature + sigma,
            f"{ctx}: signature went {r0.signature} -> {r1.signature}, predicted shift {sigma}",
        )
        # A rank-raising move (euler >= 0) with signature shift s adds a
        # +1 (resp. -1) eigendirection; a rank-lowering one removes the
        # opposite-signed direction, so the same s moves the other Betti
        # number.
        if euler >= 0:
            dbp, dbm = max(sigma, 0), max(-sigma, 0)
        else:
            dbp, dbm = min(sigma, 0), min(-sigma, 0)
        _certify(r1.b_plus == r0.b_plus + dbp, f"{ctx}: b+ shift wrong")
        _certify(r1.b_minus == r0.b_minus + dbm, f"{ctx}: b- shift wrong")
        if strict and sigma == 0:
            _certify(r1.parity == r0.parity, f"{ctx}: parity changed {r0.parity} -> {r1.parity}")
    elif strict:
        _certify(
            (r0.signature is None) == (r1.signature is None),
            f"{ctx}: signature definedness changed",
        )


def _certify_unchanged(before: Diagram, after: Diagram, ctx: str) -> None:
    """Everything certified equal: both matrices and the full report."""
    for mode in ("dotted_as_zero", "framed_only"):
        basis, expect = _mat(before, mode)
        _certify_matrix(after, mode, basis, expect, ctx)
    _certify_reports(before, after, ctx)


# ---------------------------------------------------------------------------
# Wiring helpers


def _nat(bld: DiagramBuilder, arc: str, eff_dir: int) -> int:
    """Geometric direction of natural travel for an effective direction."""
    comp = bld.arc_comp[arc]
    return eff_dir * bld.comp_meta[comp]["orient"]


def _arc_exists(d: Diagram, arc: str) -> bool:
    try:
        d.component_of(arc)
        return True
    except KeyError:
        return False


def _check_entries(d: Diagram, entries: Sequence[Entry], what: str) -> None:
    seen = set()
    for arc, dr in entries:
        if not _arc_exists(d, arc):
            raise DiagramError(f"{what}: unknown arc {arc}")
        if arc in seen:
            raise DiagramError(f"{what}: arc {arc} listed twice; split the strand first")
        if dr not in (1, -1):
            raise DiagramError(f"{what}: direction must be +1/-1")
        seen.add(arc)
    if d.endpoints:
        eps = {e.arc for e in d.endpoints.values()}
        bad = seen & eps
        if bad:
            raise DiagramError(f"{what}: arc {sorted(bad)[0]} carries a free endpoint")


def _insert_full_twist(bld: DiagramBuilder, entries: Sequence[Entry], turns: int) -> list[str]:
    """Insert |turns| full twists of handedness sign(turns) on the given
    parallel lanes (listed left to right).  Returns the arcs that continue
    each lane beyond the twist region.  Lanes return to their positions."""
    m = len(entries)
    if turns == 0 or m == 0:
        return [a for a, _ in entries]
    # Each lane tracks the "frontier" arc just below the next cell to be
    # built, together with eta: the arc's head-direction relative to
    # region-up (+1 when the succ chain climbs the region).  Lanes whose
    # chain runs against the region grow downward: the fresh piece sits
    # above the new vertex with its head entering it, and the original
    # arc ends up as the piece beyond the region.
    lanes = []
    tops = []
    for arc, dr in entries:
        comp = bld.arc_comp[arc]
        eta = _nat(bld, arc, dr)
        nb = bld.split_arc(arc)
        if eta > 0:
            lanes.append([arc, eta, comp])
            tops.append(nb)
        else:
            lanes.append([nb, eta, comp])
            tops.append(arc)
    if m == 1:
        return tops
    t = 1 if turns > 0 else -1
    for _ in range(abs(turns)):
        for _rep in range(m):
            for j in range(m - 1):
                pa, pe, pc = lanes[j]
                qa, qe, qc = lanes[j + 1]
                s = t * pe * qe
                po = bld.add_arc(pc)
                qo = bld.add_arc(qc)
                p_in = pa if pe > 0 else po
                q_in = qa if qe > 0 else qo
                if t > 0:
                    bld.add_crossing(over_in=p_in, under_in=q_in, sign=s)
                else:
                    bld.add_crossing(over_in=q_in, under_in=p_in, sign=s)
                if pe > 0:
                    bld.succ[pa] = po
                else:
                    bld.succ[po] = pa
                if qe > 0:
                    bld.succ[qa] = qo
                else:
                    bld.succ[qo] = qa
                lanes[j], lanes[j + 1] = [qo, qe, qc], [po, pe, pc]
    for (front, eta, _c), top in zip(lanes, tops):
        if eta > 0:
            bld.succ[front] = top
        else:
            bld.succ[top] = front
    return tops


@dataclass
class _Run:
    """One strand pass through an encircling circle."""

    comp: str
    first: str  # arc entering the circle region
    mid: str  # arc between the two circle crossings
    x_first: str
    x_second: str
    dir: int  # effective direction of the pass


def _encircle(
    bld: DiagramBuilder,
    entries: Sequence[Entry],
    cid: str,
    create: bool = True,
    kind: str = FRAMED,
    framing: Optional[int] = None,
    orient: int = 1,
) -> tuple[list[str], list[_Run]]:
    """Wrap a clockwise circle around the listed parallel strands
    (left to right).  Returns (ring arcs in travel order, runs)."""
    m = len(entries)
    if create:
        bld.add_component(kind, framing, orient, cid)
    if m == 0:
        a = bld.add_arc(cid)
        bld.succ[a] = a
        bld.start_arc[cid] = a
        return [a], []
    ring = [bld.add_arc(cid) for _ in range(2 * m)]
    for i in range(2 * m):
        bld.succ[ring[i]] = ring[(i + 1) % (2 * m)]
    bld.start_arc[cid] = ring[0]
    runs = []
    for j, (arc, dr) in enumerate(entries):
        comp = bld.arc_comp[arc]
        nat = _nat(bld, arc, dr)
        mid = bld.split_arc(arc)
        bld.split_arc(mid)
        bring = ring[j]
        tring = ring[2 * m - 1 - j]
        if nat > 0:
            xb = bld.add_crossing(over_in=bring, under_in=arc, sign=nat)
            xt = bld.add_crossing(over_in=mid, under_in=tring, sign=nat)
            runs.append(_Run(comp, arc, mid, xb, xt, dr))
        else:
            xt = bld.add_crossing(over_in=arc, under_in=tring, sign=nat)
            xb = bld.add_crossing(over_in=bring, under_in=mid, sign=nat)
            runs.append(_Run(comp, arc, mid, xt, xb, dr))
    return ring, runs


def _reverse_strand(bld: DiagramBuilder, arcs: set[str]) -> None:
    """Reverse the travel direction of a closed set of arcs in place.

    Crossings with exactly one strand in the set flip sign; crossings with
    both strands inside keep theirs.  The arcs' successor chain inverts."""
    old_succ = {a: bld.succ[a] for a in arcs}
    for rec in bld.crossings.values():
        o_in, u_in = rec["over_in"], rec["under_in"]
        o_c, u_c = o_in in arcs, u_in in arcs
        if o_c:
            rec["over_in"] = old_succ[o_in]
        if u_c:
            rec["under_in"] = old_succ[u_in]
        if o_c != u_c:
            rec["sign"] = -rec["sign"]
    for a, b in old_succ.items():
        bld.succ[b] = a


def _parallel_copy(
    bld: DiagramBuilder, d: Diagram, over_id: str, into_id: str
) -> tuple[set[str], dict[str, str]]:
    """Lay a parallel push-off of ``over_id`` immediately beside it (on the
    travel-right side), as a new closed strand of component ``into_id``.

    Returns (all copy arcs, map original arc -> copy arc).  The copy
    reproduces every crossing of the original: self-crossings become a
    four-crossing cell, crossings with other strands gain one crossing on
    the other strand."""
    over = d.components[over_id]
    cp: dict[str, str] = {}
    copy_arcs: set[str] = set()
    for a in over.arcs:
        na = bld.add_arc(into_id)
        cp[a] = na
        copy_arcs.add(na)
    for a in over.arcs:
        bld.succ[cp[a]] = cp[d.successor(a)]
    for x in d.crossings.values():
        oc, uc = d.crossing_comps(x)
        oa, ua = x.over_in.arc, x.under_in.arc
        if oc == over_id and uc == over_id:
            ao, bo = d.successor(oa), d.successor(ua)
            m1 = bld.add_arc(over_id)
            m2 = bld.add_arc(into_id)
            m3 = bld.add_arc(over_id)
            m4 = bld.add_arc(into_id)
            copy_arcs.update((m2, m4))
            if x.sign > 0:
                bld.crossings[x.id]["under_in"] = m3
                bld.add_crossing(over_in=cp[oa], under_in=ua, sign=x.sign)
                bld.add_crossing(over_in=m1, under_in=m4, sign=x.sign)
                bld.add_crossing(over_in=m2, under_in=cp[ua], sign=x.sign)
            else:
                bld.crossings[x.id]["over_in"] = m1
                bld.add_crossing(over_in=oa, under_in=cp[ua], sign=x.sign)
                bld.add_crossing(over_in=m2, under_in=m3, sign=x.sign)
                bld.add_crossing(over_in=cp[oa], under_in=m4, sign=x.sign)
            bld.succ[oa] = m1
            bld.succ[m1] = ao
            bld.succ[cp[oa]] = m2
            bld.succ[m2] = cp[ao]
            bld.succ[ua] = m3
            bld.succ[m3] = bo
            bld.succ[cp[ua]] = m4
            bld.succ[m4] = cp[bo]
        elif over_id in (oc, uc):
            o_over = oc == over_id
            o_arc = oa if o_over else ua
            c_arc = ua if o_over else oa
            c_comp = uc if o_over else oc
            c_out = d.successor(c_arc)
            mid = bld.add_arc(c_comp)
            copy_first = (x.sign > 0) == o_over
            if copy_first:
                if o_over:
                    bld.crossings[x.id]["under_in"] = mid
                else:
                    bld.crossings[x.id]["over_in"] = mid
                y_c_in = c_arc
            else:
                y_c_in = mid
            bld.succ[c_arc] = mid
            bld.succ[mid] = c_out
            if o_over:
                bld.add_crossing(over_in=cp[o_arc], under_in=y_c_in, sign=x.sign)
            else:
                bld.add_crossing(over_in=y_c_in, under_in=cp[o_arc], sign=x.sign)
    return copy_arcs, cp


def _head_attached(bld: DiagramBuilder, arc: str) -> bool:
    """True when the arc's head currently runs into a crossing or twist box."""
    for rec in bld.crossings.values():
        if arc in (rec["over_in"], rec["under_in"]):
            return True
    for rec in bld.box_recs.values():
        if arc in rec["strands"]:
            return True
    return False


def _band_splice(
    bld: DiagramBuilder,
    start_arc: str,
    cut_arc: str,
    gates: Sequence[tuple[str, str]],
    edge_comp: str,
) -> None:
    """Cut ``start_arc`` after its tail piece and ``cut_arc`` after itself,
    then join the four ends with two antiparallel band edges crossing over
    the gated arcs (outgoing edge first along each gate)."""
    seen = set()
    for g, _side in gates:
        if g in (start_arc, cut_arc):
            raise DiagramError(f"band gate {g} collides with a band endpoint")
        if g in seen:
            raise DiagramError(f"band gate {g} listed twice; split the strand first")
        if g not in bld.arc_comp:
            raise DiagramError(f"band gate {g} is not an arc")
        seen.add(g)
    st2 = bld.split_arc(start_arc)
    cn = bld.succ[cut_arc]
    gate_mid: dict[str, str] = {}
    prev = start_arc
    for g, side in gates:
        s1 = 1 if side == "left" else -1
        gate_mid[g] = bld.split_arc(g)
        e = bld.add_arc(edge_comp)
        bld.add_crossing(over_in=prev, under_in=g, sign=s1)
        bld.succ[prev] = e
        prev = e
    bld.succ[prev] = cn
    prev = cut_arc
    if gates and _head_attached(bld, cut_arc):
        # The cut arc still runs into a crossing or box; the return edge
        # must leave from that attachment's exit rather than re-claim the head.
        e0 = bld.add_arc(edge_comp)
        bld.succ[cut_arc] = e0
        prev = e0
    for g, side in reversed(gates):
        s2 = -1 if side == "left" else 1
        bld.split_arc(gate_mid[g])
        e = bld.add_arc(edge_comp)
        bld.add_crossing(over_in=prev, under_in=gate_mid[g], sign=s2)
        bld.succ[prev] = e
        prev = e
    bld.succ[prev] = st2


def _drop_component(bld: DiagramBuilder, cid: str) -> None:
    """Remove a component whose arcs no longer attach to anything."""
    arcs = [a for a, c in bld.arc_comp.items() if c == cid]
    for rec in bld.crossings.values():
        if rec["over_in"] in arcs or rec["under_in"] in arcs:
            raise DiagramError(f"component {cid} still meets crossings")
    for rec in bld.box_recs.values():
        if any(s in arcs for s in rec["strands"]):
            raise DiagramError(f"component {cid} still enters a twist box")
    for a in arcs:
        del bld.arc_comp[a]
        del bld.succ[a]
    del bld.comp_meta[cid]
    bld.comp_order.remove(cid)
    bld.start_arc.pop(cid, None)
    bld.thru = {k: n for k, n in bld.thru.items() if cid not in k}
    bld.marks = [m for m in bld.marks if m.comp != cid]


@dataclass
class _MeridianSite:
    circle: str
    runs: list[_Run]


def _meridian_site(d: Diagram, cid: str) -> _MeridianSite:
    """Check that ``cid`` is an embedded circle cleanly encircling a row of
    strands: no self-crossings, no boxes, and its crossings split into an
    over-run and an under-run pairing each passer straight through."""
    comp = d.components.get(cid)
    if comp is None:
        raise DiagramError(f"unknown component {cid}")
    arcs = set(comp.arcs)
    for b in d.boxes.values():
        if any(s in arcs for s in b.strands):
            raise DiagramError(f"component {cid} enters a twist box")
    if d.endpoints and any(e.arc in arcs for e in d.endpoints.values()):
        raise DiagramError(f"component {cid} is an open strand")
    seq: list[tuple[str, str]] = []  # (crossing id, role)
    for a in comp.arcs:
        site = d.end_site(End(a, 1))
        if site is None:
            continue
        x = d.crossings[site[1]]
        if x.over_in.arc in arcs and x.under_in.arc in arcs:
            raise DiagramError(f"component {cid} crosses itself")
        seq.append((x.id, "over" if x.over_in.arc == a else "under"))
    if len(seq) % 2:
        raise DiagramError(f"component {cid} has an odd crossing pattern")
    m = len(seq) // 2
    if m == 0:
        return _MeridianSite(cid, [])
    n = 2 * m
    for r in range(n):
        rot = [seq[(r + i) % n] for i in range(n)]
        role0 = rot[0][1]
        if any(role != role0 for _, role in rot[:m]):
            continue
        if any(role == role0 for _, role in rot[m:]):
            continue
        runs = []
        ok = True
        for k in range(m):
            xa = d.crossings[rot[k][0]]
            xb = d.crossings[rot[n - 1 - k][0]]
            pa = xa.under_in.arc if rot[k][1] == "over" else xa.over_in.arc
            pm = d.successor(pa)
            pb = xb.under_in.arc if rot[n - 1 - k][1] == "over" else xb.over_in.arc
            if pb != pm:
                ok = False
                break
            over_x = xa if rot[k][1] == "over" else xb
            dr = d.effective_sign(over_x)
            runs.append(_Run(d.component_of(pa), pa, pm, xa.id, xb.id, dr))
        if ok:
            return _MeridianSite(cid, runs)
    raise DiagramError(f"component {cid} is not a cleanly encircling circle")


def _cofacial_pairs(d: Diagram, comp_a: str, comp_b: str) -> list[tuple[str, str]]:
    """Arc pairs (one per component) bordering a common face, in a
    deterministic order."""
    aa = set(d.components[comp_a].arcs)
    bb = set(d.components[comp_b].arcs)
    out = []
    seen = set()
    for face in d.faces():
        fa = [e.arc for e in face if e.arc in aa]
        fb = [e.arc for e in face if e.arc in bb]
        for x in fa:
            for y in fb:
                if (x, y) not in seen:
                    seen.add((x, y))
                    out.append((x, y))
    return out


def _auto_slide(d: Diagram, target: str, over: str, orient: int) -> Diagram:
    """Slide with a gate-free band synthesized from a shared face (or, for
    components drawn apart with no shared face, any workable arc pair)."""
    cands = list(_cofacial_pairs(d, target, over))
    for x in d.components[target].arcs:
        for y in d.components[over].arcs:
            if (x, y) not in cands:
                cands.append((x, y))
    last: Optional[DiagramError] = None
    for st, en in cands:
        try:
            return handle_slide(d, target, over, Band(st, (), en), orient)
        except DiagramError as exc:
            last = exc
    # One obstructing strand between the attachment faces can be gated over.
    # Dotted circles are never gated: a band through one would change its
    # geometric pass structure without updating the pass ledger.
    gate_arcs = [
        a for c in d.components.values() if c.kind != DOTTED for a in c.arcs
    ]
    for st, en in cands:
        for g in gate_arcs:
            if g in (st, en):
                continue
            for side in ("left", "right"):
                try:
                    return handle_slide(
                        d, target, over, Band(st, ((g, side),), en), orient
                    )
                except DiagramError as exc:
                    last = exc
    raise DiagramError(
        f"no workable corridor from {target} to {over}"
        + (f" (last attempt: {last})" if last else "")
    )


# ---------------------------------------------------------------------------
# Reidemeister moves


def r1_insert(d: Diagram, arc: str, sign: int, loop_over: bool = True) -> Diagram:
    """Add a kink on ``arc``: a one-crossing curl of the given sign, with
    the loop strand on top when ``loop_over``."""
    if not _arc_exists(d, arc):
        raise DiagramError(f"unknown arc {arc}")
    if sign not in (1, -1):
        raise DiagramError("kink sign must be +1 or -1")
    bld = DiagramBuilder.from_diagram(d)
    bld.split_arc(arc)  # downstream piece keeps the old head attachment
    loop = bld.split_arc(arc)  # arc -> loop -> downstream
    if loop_over:
        bld.add_crossing(over_in=loop, under_in=arc, sign=sign)
    else:
        bld.add_crossing(over_in=arc, under_in=loop, sign=sign)
    out = bld.finalize()
    _certify_unchanged(d, out, "r1 insert")
    return out


def r1_remove(d: Diagram, xid: str) -> Diagram:
    """Remove the kink at crossing ``xid``."""
    dc = _contracted(d)
    x = dc.crossings.get(xid)
    if x is None:
        raise DiagramError(f"unknown crossing {xid}")
    a, b = x.over_in.arc, x.under_in.arc
    if dc.successor(a) != b and dc.successor(b) != a:
        raise DiagramError(f"crossing {xid} is not a kink")
    bld = DiagramBuilder.from_diagram(dc)
    bld.delete_crossing(xid)
    bld.contract_joints()
    out = bld.finalize()
    _certify_unchanged(d, out, "r1 remove")
    return out


def r2_insert(d: Diagram, over_arc: str, under_arc: str) -> Diagram:
    """Poke the strand of ``over_arc`` across a face it shares with
    ``under_arc``, adding two cancelling crossings with the over strand
    on top at both."""
    if not _arc_exists(d, over_arc) or not _arc_exists(d, under_arc):
        raise DiagramError("unknown arc for r2 insert")
    if over_arc == under_arc:
        raise DiagramError("r2 insert needs two distinct arcs")
    dart_a = dart_b = None
    for face in d.faces():
        da = [e for e in face if e.arc == over_arc]
        db = [e for e in face if e.arc == under_arc]
        if da and db:
            dart_a, dart_b = da[0], db[0]
            break
    if dart_a is None:
        raise DiagramError(f"arcs {over_arc} and {under_arc} do not border a common face")
    last: Optional[DiagramError] = None
    # Both crossings are met along each strand in intrinsic order; the
    # pairing between the strands and the leading sign depend on their
    # relative geometry, so try all combinations and keep one that is
    # planar and leaves a removable bigon between the new crossings.
    for flip in (False, True):
        for s1 in (1, -1):
            bld = DiagramBuilder.from_diagram(d)
            bld.split_arc(over_arc)
            am = bld.split_arc(over_arc)  # over_arc -> am -> downstream
            bld.split_arc(under_arc)
            bm = bld.split_arc(under_arc)  # under_arc -> bm -> downstream
            b_ins = (bm, under_arc) if flip else (under_arc, bm)
            x1 = bld.add_crossing(over_in=over_arc, under_in=b_ins[0], sign=s1)
            x2 = bld.add_crossing(over_in=am, under_in=b_ins[1], sign=-s1)
            try:
                out = bld.finalize()
            except DiagramError as exc:
                last = exc
                continue
            if not _has_bigon(out, x1, x2):
                continue
            _certify_unchanged(d, out, "r2 insert")
            return out
    raise DiagramError(f"r2 insert is not planar here: {last}")


def _has_bigon(d: Diagram, x1: str, x2: str) -> bool:
    for face in d.faces():
        if len(face) != 2 or face[0].arc == face[1].arc:
            continue
        if {d.end_site(e) for e in face} == {("x", x1), ("x", x2)}:
            return True
    return False


def r2_remove(d: Diagram, x1: str, x2: str) -> Diagram:
    """Remove the cancelling crossing pair bounding a bigon face."""
    dc = _contracted(d)
    for xid in (x1, x2):
        if xid not in dc.crossings:
            raise DiagramError(f"unknown crossing {xid}")
    xa, xb = dc.crossings[x1], dc.crossings[x2]
    if xa.sign != -xb.sign:
        raise DiagramError(f"crossings {x1},{x2} do not have opposite signs")
    found = False
    for face in dc.faces():
        if len(face) != 2 or face[0].arc == face[1].arc:
            continue
        sites = {dc.end_site(e) for e in face}
        if sites != {("x", x1), ("x", x2)}:
            continue
        ok = False
        for e in face:
            arc = e.arc
            head_x = dc.end_site(End(arc, 1))
            tail_site = dc.end_site(End(arc, 0))
            if head_x is None or tail_site is None:
                continue
            hx = dc.crossings[head_x[1]]
            tx = dc.crossings[tail_site[1]]
            over_at_head = hx.over_in.arc == arc
            over_at_tail = dc.successor(tx.over_in.arc) == arc
            if (over_at_head and over_at_tail) or (not over_at_head and not over_at_tail):
                ok = True
        if ok:
            found = True
            break
    if not found:
        raise DiagramError(f"crossings {x1},{x2} do not bound a removable bigon")
    bld = DiagramBuilder.from_diagram(dc)
    bld.delete_crossing(x1)
    bld.delete_crossing(x2)
    bld.contract_joints()
    out = bld.finalize()
    _certify_unchanged(d, out, "r2 remove")
    return out


def r3_move(d: Diagram, xids: Sequence[str]) -> Diagram:
    """Flip the triangle bounded by the three given crossings."""
    from .normalize import _apply_triangle, _triangle_faces, _triangle_movable

    want = set(xids)
    if len(want) != 3:
        raise DiagramError("r3 needs three distinct crossings")
    dc = _contracted(d)
    for xid in want:
        if xid not in dc.crossings:
            raise DiagramError(f"unknown crossing {xid}")
    for face in _triangle_faces(dc):
        corners = {dc.end_site(e)[1] for e in face}
        if corners != want:
            continue
        if not _triangle_movable(dc, face):
            raise DiagramError(f"triangle {sorted(want)} has no strand free to move")
        out = _apply_triangle(dc, face)
        _certify_unchanged(d, out, "r3")
        return out
    raise DiagramError(f"crossings {sorted(want)} do not bound a triangle face")


def reidemeister(
    d: Diagram,
    variant: str,
    site: Union[Sequence, str],
    direction: str = "insert",
) -> Diagram:
    """Uniform entry point: variant R1/R2/R3 with a variant-specific site.

    R1 insert: (arc, sign, "loop"|"approach"); R1 remove: crossing id.
    R2 insert: (over arc, under arc); R2 remove: (crossing, crossing).
    R3: the triangle's three crossing ids (direction ignored)."""
    v = variant.upper()
    if isinstance(site, str):
        site = (site,)
    if v == "R1":
        if direction == "insert":
            arc, sign, over = site
            if isinstance(over, str):
                over = over == "loop"
            return r1_insert(d, arc, int(sign), over)
        return r1_remove(d, site[0])
    if v == "R2":
        if direction == "insert":
            return r2_insert(d, site[0], site[1])
        return r2_remove(d, site[0], site[1])
    if v == "R3":
        return r3_move(d, tuple(site))
    raise DiagramError(f"unknown Reidemeister variant {variant!r}")


# ---------------------------------------------------------------------------
# Twist-box shifts


def boxshift(d: Diagram, box: str, delta: int) -> Diagram:
    """Absorb |delta| adjacent explicit full twists of handedness
    sign(delta) into the box, adding delta to its turn count."""
    if delta == 0:
        raise DiagramError("boxshift needs a nonzero delta")
    dc = _contracted(d)
    if box not in dc.boxes:
        raise DiagramError(f"unknown box {box}")
    brec = dc.boxes[box]
    need = 2 * abs(delta)
    want_sign = 1 if delta > 0 else -1
    anti_factor = -1 if brec.anti else 1

    def walk(spec) -> Optional[list[str]]:
        # Each lane is walked away from the box along the strand's own
        # chain: forward lanes climb via successor (head meets each cell),
        # backward lanes via predecessor (tail meets it).
        cur = [arc for arc, _ in spec]
        fwd = [f for _, f in spec]
        found = []
        for _ in range(need):
            sites = []
            for c, f in zip(cur, fwd):
                if c is None:
                    return None
                sites.append(dc.end_site(End(c, 1 if f else 0)))
            if sites[0] is None or sites[0] != sites[1] or sites[0][0] != "x":
                return None
            x = dc.crossings[sites[0][1]]
            if x.sign * anti_factor != want_sign or x.id in found:
                return None
            found.append(x.id)
            cur = [
                dc.successor(c) if f else dc.predecessor(c)
                for c, f in zip(cur, fwd)
            ]
        return found

    sa, sb = brec.strands
    if brec.anti:
        out_spec = ((dc.successor(sa), True), (sb, False))
        in_spec = ((sa, False), (dc.successor(sb), True))
    else:
        out_spec = ((dc.successor(sa), True), (dc.successor(sb), True))
        in_spec = ((sa, False), (sb, False))
    xs = walk(out_spec)
    if xs is None:
        xs = walk(in_spec)
    if xs is None:
        raise DiagramError(
            f"no absorbable {'right' if delta > 0 else 'left'}-handed twist region beside box {box}"
        )
    bld = DiagramBuilder.from_diagram(dc)
    for xid in xs:
        bld.delete_crossing(xid)
    bld.box_recs[box]["turns"] += delta
    bld.contract_joints()
    out = bld.finalize()
    # The ladder conditions (uniform handedness, the two strands tightly
    # adjacent cell after cell) force a genuine full-twist region in any
    # planar diagram, so absorbing it is exact; which strand crosses over
    # first differs from box expansion only by a flype.
    _certify_unchanged(d, out, "boxshift")
    _certify(
        out.boxes[box].turns == brec.turns + delta,
        "boxshift: turn count arithmetic",
    )
    _certify(
        len(out.crossings) == len(dc.crossings) - need,
        "boxshift: crossing count arithmetic",
    )
    return out


# ---------------------------------------------------------------------------
# Handle slides


def handle_slide(d: Diagram, target: str, over: str, band: Band, orient: int) -> Diagram:
    """Replace ``target`` by its band-sum with a framing-parallel push-off
    of ``over`` along ``band``.  New framing: f_t + f_o + 2*orient*lk."""
    if orient not in (1, -1):
        raise DiagramError("orient must be +1 or -1")
    for cid in (target, over):
        if cid not in d.components:
            raise DiagramError(f"unknown component {cid}")
    if target == over:
        raise DiagramError("cannot slide a handle over itself")
    tc, oc = d.components[target], d.components[over]
    for cid, c in ((target, tc), (over, oc)):
        if c.kind == DOTTED:
            raise DiagramError(f"component {cid} is dotted; slides need 2-handles")
        if c.kind != FRAMED:
            raise DiagramError(f"component {cid} is not a framed handle")
    over_arcs = set(oc.arcs)
    for b in d.boxes.values():
        if any(s in over_arcs for s in b.strands):
            raise DiagramError(f"component {over} runs through a twist box; expand it first")
    if d.endpoints:
        eps = {e.arc for e in d.endpoints.values()}
        if eps & (over_arcs | set(tc.arcs)):
            raise DiagramError("cannot slide open strands")
    if band.start not in tc.arcs:
        raise DiagramError(f"band start {band.start} is not an arc of {target}")
    if band.end not in oc.arcs:
        raise DiagramError(f"band end {band.end} is not an arc of {over}")

    lk_pre = d.linking_number(target, over)
    f_new = tc.framing + oc.framing + 2 * orient * lk_pre
    predictions = []
    for mode in ("dotted_as_zero", "framed_only"):
        basis, ent = _mat(d, mode)
        exp = dict(ent)
        for c in basis:
            if c == target:
                continue
            exp[(target, c)] = ent[(target, c)] + orient * ent[(over, c)]
            exp[(c, target)] = exp[(target, c)]
        exp[(target, target)] = (
            ent[(target, target)]
            + 2 * orient * ent[(target, over)]
            + ent[(over, over)]
        )
        _certify(exp[(target, target)] == f_new, "slide framing arithmetic out of step")
        predictions.append((mode, basis, exp))

    bld = DiagramBuilder.from_diagram(d)
    copy_arcs, cp = _parallel_copy(bld, d, over, target)
    # The push-off runs beside ``over`` in its own travel direction; reverse
    # it when that disagrees with the requested effective orientation.
    if orient * tc.orient * oc.orient < 0:
        _reverse_strand(bld, copy_arcs)
    corr = oc.framing - d.writhe(over)
    cut = cp[band.end]
    if corr:
        tops = _insert_full_twist(
            bld,
            [(band.end, oc.orient), (cut, orient * oc.orient)],
            corr,
        )
        cut = tops[1]
    bld.comp_meta[target]["framing"] = f_new
    _band_splice(bld, band.start, cut, band.gates, target)
    for (dcid, fcid), n in d.thru.items():
        if fcid == over and n:
            key = (dcid, target)
            bld.thru[key] = bld.thru.get(key, 0) + orient * n
    bld.contract_joints()
    out = bld.finalize()

    for mode, basis, exp in predictions:
        _certify_matrix(out, mode, basis, exp, "slide")
    _certify_reports(d, out, "slide")
    return out


# ---------------------------------------------------------------------------
# Blow-up / blow-down


def blow_up(
    d: Diagram, around: Sequence[Entry], sign: int, name: Optional[str] = None
) -> Diagram:
    """Add a ``sign``-framed unknot around the listed strands, twisting
    them by one ``sign``-handed full twist (so a same-signed blow-down
    returns the original diagram)."""
    if sign not in (1, -1):
        raise DiagramError("blow-up sign must be +1 or -1")
    entries = [(a, dr) for a, dr in around]
    _check_entries(d, entries, "blow up")
    if name is not None and name in d.components:
        raise DiagramError(f"component {name} already exists")
    a_of: dict[str, int] = {}
    for arc, dr in entries:
        c = d.component_of(arc)
        a_of[c] = a_of.get(c, 0) + dr

    predictions = []
    for mode in ("dotted_as_zero", "framed_only"):
        basis, ent = _mat(d, mode)
        exp = dict(ent)
        for ci in basis:
            for cj in basis:
                if ci == cj and d.components[ci].kind == DOTTED:
                    continue
                exp[(ci, cj)] = ent[(ci, cj)] + sign * a_of.get(ci, 0) * a_of.get(cj, 0)
        predictions.append((mode, basis, exp))

    bld = DiagramBuilder.from_diagram(d)
    cid = name or bld.fresh("e")
    ring, runs = _encircle(bld, entries, cid, create=True, kind=FRAMED, framing=sign)
    if len(entries) >= 2:
        _insert_full_twist(bld, [(r.first, r.dir) for r in runs], sign)
    for c, a in a_of.items():
        meta = bld.comp_meta[c]
        if meta["kind"] == FRAMED:
            meta["framing"] += sign * a * a
    out = bld.finalize()

    for mode, basis, exp in predictions:
        full_basis = list(basis) + [cid]
        full = dict(exp)
        for c in basis:
            full[(cid, c)] = full[(c, cid)] = a_of.get(c, 0)
        full[(cid, cid)] = sign
        _certify_matrix(out, mode, full_basis, full, "blow up")
    _certify_reports(d, out, "blow up", euler=1, sigma=sign, strict=False)
    return out


def blow_down(d: Diagram, comp: str, sign: int) -> Diagram:
    """Remove a ±1-framed cleanly-encircling unknot, inserting one
    opposite-handed full twist on the strands through it and shifting
    each framed passer's framing by -sign * (algebraic pass count)²."""
    if sign not in (1, -1):
        raise DiagramError("blow-down sign must be +1 or -1")
    c = d.components.get(comp)
    if c is None:
        raise DiagramError(f"unknown component {comp}")
    if c.kind != FRAMED or c.framing != sign:
        raise DiagramError(
            f"component {comp} is not a {sign:+d}-framed handle (framing {c.framing})"
        )
    for (dcid, fcid), n in d.thru.items():
        if fcid == comp and n:
            raise DiagramError(f"component {comp} passes through the disk of {dcid}")
    dc = _contracted(d)
    site = _meridian_site(dc, comp)
    a_of: dict[str, int] = {}
    for r in site.runs:
        a_of[r.comp] = a_of.get(r.comp, 0) + r.dir

    predictions = []
    for mode in ("dotted_as_zero", "framed_only"):
        basis, ent = _mat(d, mode)
        keep = [x for x in basis if x != comp]
        exp = {}
        for ci in keep:
            for cj in keep:
                if ci == cj and d.components[ci].kind == DOTTED:
                    exp[(ci, cj)] = 0
                else:
                    exp[(ci, cj)] = ent[(ci, cj)] - sign * a_of.get(ci, 0) * a_of.get(cj, 0)
        predictions.append((mode, keep, exp))

    bld = DiagramBuilder.from_diagram(dc)
    for r in site.runs:
        bld.delete_crossing(r.x_first, splice=False)
        bld.delete_crossing(r.x_second, splice=False)
    _drop_component(bld, comp)
    if len(site.runs) >= 2:
        _insert_full_twist(bld, [(r.mid, r.dir) for r in site.runs], -sign)
    for cc, a in a_of.items():
        meta = bld.comp_meta[cc]
        if meta["kind"] == FRAMED:
            meta["framing"] -= sign * a * a
    bld.contract_joints()
    out = bld.finalize()

    for mode, keep, exp in predictions:
        _certify_matrix(out, mode, keep, exp, "blow down")
    _certify_reports(d, out, "blow down", euler=-1, sigma=-sign, strict=False)
    return out


def blow(
    d: Diagram,
    direction: str,
    site: Union[str, Sequence[Entry]],
    sign: int,
    name: Optional[str] = None,
) -> Diagram:
    """Dispatch: ``blow(d, "up", strand entries, sign)`` or
    ``blow(d, "down", component id, sign)``."""
    if direction == "up":
        if isinstance(site, str):
            raise DiagramError("blow up takes a list of (arc, direction) entries")
        return blow_up(d, site, sign, name)
    if direction == "down":
        if not isinstance(site, str):
            raise DiagramError("blow down takes a component id")
        return blow_down(d, site, sign)
    raise DiagramError(f"blow direction must be up or down, got {direction!r}")


# ---------------------------------------------------------------------------
# Cancelling pairs


def _shed_meridian_bigons(d: Diagram, circle: str, comp: str) -> Diagram:
    """Strip removable bigons between ``circle`` and ``comp``.

    A reroute slide sends a push-off back through the encircling curve in
    the reverse direction; the old pass and the new one cancel through two
    bigon faces.  Each removal is a certified crossing-pair deletion, so the
    pass ledger (which tracks the signed count) is untouched."""
    cur = d
    changed = True
    while changed:
        changed = False
        pair = {circle, comp}
        xs = [
            x.id
            for x in cur.crossings.values()
            if set(cur.crossing_comps(x)) == pair
        ]
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                try:
                    cur = r2_remove(cur, xs[i], xs[j])
                    changed = True
                    break
                except DiagramError:
                    continue
            if changed:
                break
    return cur


def _shed_component_bigons(d: Diagram, comp: str) -> Diagram:
    """Strip removable bigons incident to ``comp`` against any strand.

    Used after sliding a circle across an annulus: the passes it vacates
    cancel pairwise against the push-off copy's passes, but the rest of the
    diagram must stay untouched (a full normalization could simplify other
    components away)."""
    cur = d
    changed = True
    while changed:
        changed = False
        xs = [
            x.id for x in cur.crossings.values() if comp in cur.crossing_comps(x)
        ]
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                try:
                    cur = r2_remove(cur, xs[i], xs[j])
                    changed = True
                    break
                except DiagramError:
                    continue
            if changed:
                break
    return cur


def cancel_pair(d: Diagram, dotted: str, handle: str) -> Diagram:
    """Cancel a dotted circle against a 0-framed handle passing through it
    geometrically and algebraically once.  Other strands through the
    dotted circle are first slid over the cancelling handle until their
    pass counts vanish, then the pair is erased."""
    dcmp = d.components.get(dotted)
    hcmp = d.components.get(handle)
    if dcmp is None or hcmp is None:
        raise DiagramError("unknown component in cancel_pair")
    if dcmp.kind != DOTTED:
        raise DiagramError(f"component {dotted} is not dotted")
    if hcmp.kind != FRAMED or hcmp.framing != 0:
        raise DiagramError(f"component {handle} is not a 0-framed handle")
    t_h = d.thru.get((dotted, handle), 0)
    if t_h not in (1, -1):
        raise DiagramError(
            f"handle {handle} passes {t_h} times through {dotted}; cancellation needs ±1"
        )
    h_cross = [
        x
        for x in d.crossings.values()
        if dotted in d.crossing_comps(x) and handle in d.crossing_comps(x)
    ]
    h_total = [x for x in d.crossings.values() if handle in d.crossing_comps(x)]
    if len(h_cross) != 2 or len(h_total) != 2:
        raise DiagramError(
            f"handle {handle} must meet exactly the two crossings of one pass through {dotted}"
        )
    for (dcid, fcid), n in d.thru.items():
        if fcid == handle and dcid != dotted and n:
            raise DiagramError(f"handle {handle} passes through another 1-handle disk")

    before = d
    cur = _contracted(d)
    guard = 0
    while True:
        site = _meridian_site(cur, dotted)
        for r in site.runs:
            if cur.components[r.comp].kind != FRAMED:
                raise DiagramError(
                    f"strand of {r.comp} through {dotted} is not a framed handle"
                )
        pending = [
            c
            for c in sorted({r.comp for r in site.runs})
            if c != handle and cur.thru.get((dotted, c), 0)
        ]
        if not pending:
            break
        guard += 1
        if guard > 64:
            raise DiagramError(f"rerouting through {dotted} did not terminate")
        tgt = pending[0]
        h_idx = [i for i, r in enumerate(site.runs) if r.comp == handle]
        if len(h_idx) != 1:
            raise DiagramError(f"handle {handle} no longer passes {dotted} once")
        h_i = h_idx[0]
        orient = -1 if cur.thru[(dotted, tgt)] * t_h > 0 else 1
        runs = site.runs
        n = len(runs)
        attempts = []
        for t_i in (i for i, r in enumerate(runs) if r.comp == tgt):
            for direction in (1, -1):
                gates_idx = []
                i = t_i
                while (i + direction) % n != h_i:
                    i = (i + direction) % n
                    gates_idx.append(i)
                for polarity in (1, -1):
                    gates = tuple(
                        (
                            runs[i].mid,
                            "left" if runs[i].dir * direction * polarity > 0 else "right",
                        )
                        for i in gates_idx
                    )
                    attempts.append(Band(runs[t_i].mid, gates, runs[h_i].mid))
        last: Optional[DiagramError] = None
        nxt = None
        for band in attempts:
            try:
                nxt = handle_slide(cur, tgt, handle, band, orient)
                break
            except DiagramError as exc:
                last = exc
        if nxt is None:
            try:
                nxt = _auto_slide(cur, tgt, handle, orient)
            except DiagramError:
                raise DiagramError(f"could not reroute {tgt} over {handle}: {last}")
        cur = _shed_meridian_bigons(_contracted(nxt), dotted, tgt)

    site = _meridian_site(cur, dotted)
    bld = DiagramBuilder.from_diagram(cur)
    dead = {
        x.id
        for x in cur.crossings.values()
        if dotted in cur.crossing_comps(x) or handle in cur.crossing_comps(x)
    }
    for xid in dead:
        bld.delete_crossing(xid, splice=False)
    _drop_component(bld, dotted)
    _drop_component(bld, handle)
    bld.contract_joints()
    out = bld.finalize()
    _certify_reports(before, out, "cancel pair", strict=False)
    _certify(
        len(out.components) == len(before.components) - 2,
        "cancel pair: component count did not drop by two",
    )
    return out


# ---------------------------------------------------------------------------
# 2-/3-handle pairs and the composite moves


def _mark_entries(d: Diagram, label: str) -> list[Entry]:
    mark = d.mark(label)
    if mark is None:
        raise DiagramError(f"no marked curve named {label}")
    if not mark.path:
        raise DiagramError(f"marked curve {label} has no arc path")
    entries = list(mark.path_steps())
    _check_entries(d, entries, f"mark {label}")
    return entries


def _add_23_impl(
    d: Diagram,
    site_a: Sequence[Entry],
    site_b: Sequence[Entry],
    gates: Sequence[tuple[str, str]],
    name: Optional[str],
) -> tuple[Diagram, str, list[_Run], list[_Run]]:
    if [(d.component_of(a), dr) for a, dr in site_a] != [
        (d.component_of(a), dr) for a, dr in site_b
    ]:
        raise DiagramError(
            "the two curve copies must encircle the same strands with the same directions"
        )
    if {a for a, _ in site_a} & {a for a, _ in site_b}:
        raise DiagramError("the two curve copies need disjoint arcs; split the strand first")

    m = len(site_a)

    def attempt(
        i: int,
        j: int,
        g: Sequence[tuple[str, str]],
        mask: int,
        site_b_eff: Sequence[Entry],
    ):
        bld = DiagramBuilder.from_diagram(d)
        cid = name or bld.fresh("delta")
        if cid in bld.comp_meta:
            raise DiagramError(f"component {cid} already exists")
        bld.add_component(FRAMED, 0, 1, cid)
        ring1, runs1 = _encircle(bld, site_a, cid, create=False)
        pre_x = set(bld.crossings)
        ring2, runs2 = _encircle(bld, site_b_eff, cid, create=False)
        ring2_x = [x for x in bld.crossings if x not in pre_x]
        _reverse_strand(bld, set(ring2))
        # Each strand's winding between its two sites rotates the frame the
        # copies are parallel in; an odd half-turn shows up as the second
        # ring passing that strand with the opposite lobe in front.  The
        # mask says which strands to flip; linking data is unaffected.
        ring2_set = set(ring2)
        for xid in ring2_x:
            rec = bld.crossings[xid]
            ra = rec["over_in"] if rec["over_in"] in ring2_set else rec["under_in"]
            idx = ring2.index(ra)
            k = idx if idx < m else 2 * m - 1 - idx
            if (mask >> k) & 1:
                rec["over_in"], rec["under_in"] = rec["under_in"], rec["over_in"]
        # Cut the second ring mid-arc so the corridor can leave from either
        # side of it rather than only from a crossing's exit corner.
        bld.split_arc(ring2[j])
        _band_splice(bld, ring1[i], ring2[j], g, cid)
        bld.start_arc[cid] = ring1[0] if i != 0 else ring1[-1]
        bld.three_handles += 1
        return bld.finalize(), cid, runs1, runs2

    n_ring = 2 * m if site_a else 1
    masks = sorted(range(1 << m), key=lambda v: bin(v).count("1"))
    # The strands may trade places between the two sites, so the second
    # ring's left-to-right reading can be the mirror of the mark order.
    orders: list[list[Entry]] = [list(site_b)]
    rev = list(reversed(site_b))
    if m > 1 and [(d.component_of(a), dr) for a, dr in rev] == [
        (d.component_of(a), dr) for a, dr in site_a
    ]:
        orders.append(rev)
    if gates:
        cands: list[tuple[int, int, tuple, int, list[Entry]]] = [
            (-1, 0, tuple(gates), mask, sb) for sb in orders for mask in masks
        ]
    else:
        # No corridor was specified: search the splice attachments and ring
        # patterns, then allow one gate over an obstructing strand.
        gate_arcs = [
            a for c in d.components.values() if c.kind != DOTTED for a in c.arcs
        ]
        gate_opts: list[tuple] = [()]
        gate_opts += [((ga, side),) for ga in gate_arcs for side in ("left", "right")]
        cands = [
            (i, j, g, mask, sb)
            for g in gate_opts
            for sb in orders
            for mask in masks
            for i in range(n_ring)
            for j in range(n_ring)
        ]
    out = None
    last: Optional[DiagramError] = None
    for i, j, g, mask, sb in cands:
        try:
            out, cid, runs1, runs2 = attempt(i, j, g, mask, sb)
            break
        except DiagramError as exc:
            last = exc
    if out is None:
        raise DiagramError(f"no workable corridor between the curve copies: {last}")

    for mode in ("dotted_as_zero", "framed_only"):
        basis, ent = _mat(d, mode)
        full_basis = list(basis) + [cid]
        exp = dict(ent)
        for c in basis:
            exp[(cid, c)] = exp[(c, cid)] = 0
        exp[(cid, cid)] = 0
        _certify_matrix(out, mode, full_basis, exp, "add 2/3 pair")
    _certify_reports(d, out, "add 2/3 pair", strict=False)
    _certify(out.three_handles == d.three_handles + 1, "add 2/3 pair: 3-handle count")
    return out, cid, runs1, runs2


def add_23_pair(
    d: Diagram,
    gamma: Union[str, Sequence[Entry]],
    band: Optional[Band] = None,
    far: Optional[Sequence[Entry]] = None,
    name: Optional[str] = None,
) -> Diagram:
    """Add a cancelling 2-/3-handle pair: a 0-framed handle attached along
    the band-sum of two opposite parallel copies of a curve encircling the
    marked strands, plus one 3-handle.

    ``gamma`` is a mark label (its primed sibling gives the second copy)
    or an explicit entry list with ``far`` as the second copy."""
    if isinstance(gamma, str):
        site_a = _mark_entries(d, gamma)
        site_b = _mark_entries(d, gamma + "'")
        if far is not None:
            raise DiagramError("pass either a mark label or explicit sites, not both")
    else:
        site_a = list(gamma)
        if far is None:
            raise DiagramError("explicit curve entries need far= for the second copy")
        site_b = list(far)
        _check_entries(d, site_a, "curve")
        _check_entries(d, site_b, "curve copy")
    gates = band.gates if band is not None else ()
    out, _, _, _ = _add_23_impl(d, site_a, site_b, gates, name)
    return out


def delta_move(d: Diagram, gamma: str, band: Optional[Band], sign: int) -> Diagram:
    """Twist move across a marked curve pair γ (mark ``gamma``) and its
    primed sibling: insert a ``sign`` full twist on the strands at the
    first site and the opposite twist at the second, and add the 0-framed
    2/3-pair along the doubled curve that trades the two twists off
    against each other.  (The pair is what a blow-up at one site slid
    across the doubled curve and blown down at the other leaves behind.)
    Net: every framing and linking number, χ and both homology
    presentations are unchanged; one 0-framed handle and one 3-handle
    are added."""
    if sign not in (1, -1):
        raise DiagramError("delta sign must be +1 or -1")
    site_a = _mark_entries(d, gamma)
    site_b = _mark_entries(d, gamma + "'")
    gates = band.gates if band is not None else ()
    d1, delta_cid, runs1, runs2 = _add_23_impl(d, site_a, site_b, gates, None)

    bld = DiagramBuilder.from_diagram(d1)
    _insert_full_twist(bld, [(r.mid, r.dir) for r in runs1], sign)
    _insert_full_twist(bld, [(r.mid, r.dir) for r in runs2], -sign)
    out = bld.finalize()

    for mode in ("dotted_as_zero", "framed_only"):
        basis, ent = _mat(d, mode)
        full_basis = list(basis) + [delta_cid]
        exp = dict(ent)
        for c in basis:
            exp[(delta_cid, c)] = exp[(c, delta_cid)] = 0
        exp[(delta_cid, delta_cid)] = 0
        _certify_matrix(out, mode, full_basis, exp, "delta move")
    _certify_reports(d, out, "delta move", strict=False)
    _certify(out.three_handles == d.three_handles + 1, "delta move: 3-handle count")
    return out


def double_slide(d: Diagram, zero: str, over: str) -> Diagram:
    """Slide a 0-framed clasp handle over an adjacent ∓1-framed circle and
    back around its other side.  Requires both circles to cleanly encircle
    the same two strands of one component at neighbouring positions.  Net
    effect: the ∓1 circle hops across the 0-framed one and the vacated
    site gains one full twist; every framing and linking number is
    unchanged."""
    zc = d.components.get(zero)
    oc = d.components.get(over)
    if zc is None or oc is None:
        raise DiagramError("unknown component in double_slide")
    if zc.kind != FRAMED or zc.framing != 0:
        raise DiagramError(f"component {zero} is not a 0-framed handle")
    if oc.kind != FRAMED or oc.framing not in (1, -1):
        raise DiagramError(f"component {over} is not a ±1-framed handle")
    dc = _contracted(d)
    so = _meridian_site(dc, over)
    sz = _meridian_site(dc, zero)
    if len(so.runs) != 2 or len(sz.runs) != 2:
        raise DiagramError("double_slide needs both circles around exactly two strands")
    comps = {r.comp for r in so.runs} | {r.comp for r in sz.runs}
    if len(comps) != 1:
        raise DiagramError(
            "double_slide needs both circles around two strands of one component"
        )
    strand = comps.pop()
    if strand in (zero, over):
        raise DiagramError("the encircled strands must belong to a third component")

    z_first = {r.first for r in sz.runs}
    o_first = {r.first for r in so.runs}
    over_upstream = all(dc.successor(r.mid) in z_first for r in so.runs)
    over_downstream = all(dc.successor(r.mid) in o_first for r in sz.runs)
    if over_upstream == over_downstream:
        raise DiagramError(
            f"{over} is not immediately beside {zero} along both strands"
        )

    bld = DiagramBuilder.from_diagram(dc)
    for r in so.runs:
        bld.delete_crossing(r.x_first, splice=False)
        bld.delete_crossing(r.x_second, splice=False)
    ring_arcs = [a for a, c in bld.arc_comp.items() if c == over]
    for rec in bld.crossings.values():
        if rec["over_in"] in ring_arcs or rec["under_in"] in ring_arcs:
            raise DiagramError(f"component {over} meets strands outside its circle")
    for a in ring_arcs:
        del bld.arc_comp[a]
        del bld.succ[a]
    if over_upstream:
        new_site = [(dc.successor(z.mid), z.dir) for z in sz.runs]
    else:
        new_site = [(z.first, z.dir) for z in sz.runs]
    twist_entries = [(r.mid, r.dir) for r in so.runs]
    turns = -oc.framing * (1 if over_upstream else -1)
    if over_upstream:
        _insert_full_twist(bld, twist_entries, turns)
        _encircle(bld, new_site, over, create=False)
    else:
        _encircle(bld, new_site, over, create=False)
        _insert_full_twist(bld, twist_entries, turns)
    bld.contract_joints()
    out = bld.finalize()
    _certify_unchanged(d, out, "double slide")
    _certify(
        out.components[zero].framing == 0 and out.components[over].framing == oc.framing,
        "double slide: framings drifted",
    )
    return out


def cp2_fuse(d: Diagram, mode: str, plus: str, v1: str, v2: str) -> Diagram:
    """Merge a disjoint +1-framed unknot into two −1-framed parallel
    vanishing cycles (four slides), or split it back out.

    merge: the +1 circle slides over both −1 circles (framings +1 → 0 →
    −1), then each vanishing cycle slides off it (−1 → 0 each); the
    result is a −1 circle around both strands and a 0/0-framed pair
    linking once.  split is the exact inverse."""
    for cid in (plus, v1, v2):
        if cid not in d.components:
            raise DiagramError(f"unknown component {cid}")
    if len({plus, v1, v2}) != 3:
        raise DiagramError("cp2_fuse needs three distinct components")
    pc = d.components[plus]
    if pc.kind != FRAMED:
        raise DiagramError(f"component {plus} is not framed")
    f1, f2 = d.components[v1].framing, d.components[v2].framing
    basis0, ent0 = _mat(d, "dotted_as_zero")

    def elementary(entries: dict, tgt: str, ov: str, orient: int) -> dict:
        exp = dict(entries)
        for c in basis0:
            if c == tgt:
                continue
            exp[(tgt, c)] = entries[(tgt, c)] + orient * entries[(ov, c)]
            exp[(c, tgt)] = exp[(tgt, c)]
        exp[(tgt, tgt)] = (
            entries[(tgt, tgt)]
            + 2 * orient * entries[(tgt, ov)]
            + entries[(ov, ov)]
        )
        return exp

    if mode == "merge":
        if pc.framing != 1:
            raise DiagramError(f"component {plus} must be +1-framed to merge")
        if f1 != -1 or f2 != -1:
            raise DiagramError("both vanishing cycles must be -1-framed")
        if any(plus in d.crossing_comps(x) for x in d.crossings.values()):
            raise DiagramError(f"component {plus} must be disjoint before merging")
        steps = [(plus, v1, 1), (plus, v2, 1), (v1, plus, -1), (v2, plus, -1)]
        trace = [(plus, 0), (plus, -1), (v1, 0), (v2, 0)]
    elif mode == "split":
        if pc.framing != -1:
            raise DiagramError(f"component {plus} must be -1-framed to split")
        if f1 != 0 or f2 != 0:
            raise DiagramError("both vanishing cycles must be 0-framed to split")
        steps = [(v2, plus, 1), (v1, plus, 1), (plus, v2, -1), (plus, v1, -1)]
        trace = [(v2, -1), (v1, -1), (plus, 0), (plus, 1)]
    else:
        raise DiagramError(f"cp2_fuse mode must be merge or split, got {mode!r}")

    exp = ent0
    cur = d
    for (tgt, ov, orient), (fcomp, fval) in zip(steps, trace):
        exp = elementary(exp, tgt, ov, orient)
        cur = _auto_slide(cur, tgt, ov, orient)
        got = cur.components[fcomp].framing
        _certify(
            got == fval,
            f"cp2 {mode}: framing of {fcomp} is {got}, expected {fval}",
        )
    cur = normalize(cur)
    _certify_matrix(cur, "dotted_as_zero", basis0, exp, f"cp2 {mode}")
    _certify_reports(d, cur, f"cp2 {mode}")
    return cur


# ---------------------------------------------------------------------------
# Record dispatch


def apply_move(d: Diagram, rec: MoveRecord) -> Diagram:
    """Replay one MoveRecord on a diagram."""
    k = rec.kind
    if k == "R1":
        if rec.require("op") == "insert":
            return r1_insert(
                d,
                rec.require("arc"),
                _parse_sign(rec.require("sign")),
                rec.require("over") == "loop",
            )
        return r1_remove(d, rec.require("x"))
    if k == "R2":
        if rec.require("op") == "insert":
            return r2_insert(d, rec.require("over"), rec.require("under"))
        return r2_remove(d, rec.require("x"), rec.require("y"))
    if k == "R3":
        return r3_move(d, (rec.require("x"), rec.require("y"), rec.require("z")))
    if k == "Slide":
        return handle_slide(
            d,
            rec.require("target"),
            rec.require("over"),
            Band.parse(rec.require("band")),
            _parse_sign(rec.require("orient"), "orient"),
        )
    if k == "BlowUp":
        return blow_up(
            d,
            _parse_entries(rec.require("around")),
            _parse_sign(rec.require("sign")),
            rec.get("name"),
        )
    if k == "BlowDown":
        return blow_down(d, rec.require("comp"), _parse_sign(rec.require("sign")))
    if k == "CancelPair":
        return cancel_pair(d, rec.require("dotted"), rec.require("handle"))
    if k == "Add23Pair":
        return add_23_pair(
            d, rec.require("gamma"), Band.parse(rec.require("band"), gates_only=True)
        )
    if k == "DeltaMove":
        return delta_move(
            d,
            rec.require("gamma"),
            Band.parse(rec.require("band"), gates_only=True),
            _parse_sign(rec.require("sign")),
        )
    if k == "DoubleSlide":
        return double_slide(d, rec.require("zero"), rec.require("over"))
    if k in ("CP2Merge", "CP2Split"):
        return cp2_fuse(
            d,
            "merge" if k == "CP2Merge" else "split",
            rec.require("plus"),
            rec.require("v1"),
            rec.require("v2"),
        )
    if k == "BoxShift":
        return boxshift(d, rec.require("box"), int(rec.require("delta")))
    raise DiagramError(f"unknown move kind {k!r}")


def apply_script(
    d: Diagram, script: Union[str, Sequence[MoveRecord]]
) -> tuple[Diagram, list[MoveRecord]]:
    """Replay a move script (text or parsed records).  Returns the final
    diagram and the record list."""
    records = parse_move_script(script) if isinstance(script, str) else list(script)
    cur = d
    for i, rec in enumerate(records):
        try:
            cur = apply_move(cur, rec)
        except DiagramError as exc:
            raise DiagramError(f"move {i + 1} ({rec.line()}): {exc}") from exc
    return cur, records
