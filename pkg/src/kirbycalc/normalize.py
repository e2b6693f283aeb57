"""Greedy diagram simplification and decidable structural comparison.

``normalize`` applies only moves that strictly shrink the diagram:

* kink removal (a crossing whose two strands are joined by an empty loop),
* bigon removal (two crossings joined by two parallel arcs bounding a face,
  with the same strand on top at both ends),
* twist-box absorption (zero-turn boxes vanish; two boxes stacked along the
  same pair of strands merge, their turns adding),

plus, when none of those applies, a bounded search over triangle flips
(depth at most 3) looking for a position where a shrinking move becomes
available.  Triangle flips never change the crossing count, so the whole
pass terminates and is idempotent.  Decorations, framings, handle counters,
pass-through counts and marks are never altered.

``canonical_relabel`` renames components, arcs, crossings and boxes into a
label-independent normal form so that ``structural_equal`` can compare two
diagrams by comparing emitted text.
"""

from __future__ import annotations

import itertools
from typing import Optional

from .diagram import (
    Crossing,
    Component,
    Diagram,
    DiagramBuilder,
    DiagramError,
    End,
    MarkedCurve,
    TwistBox,
    path_entry,
)

__all__ = [
    "normalize",
    "canonical_relabel",
    "canonical_form",
    "structural_equal",
]

LogEntry = tuple
Log = list


# ---------------------------------------------------------------------------
# Shrinking moves


def _contracted(d: Diagram) -> Diagram:
    """Merge away plain degree-two joints so adjacency tests see one arc
    per uninterrupted strand segment."""
    bld = DiagramBuilder.from_diagram(d)
    bld.contract_joints()
    return bld.finalize()


def _find_kink(d: Diagram) -> Optional[str]:
    """A crossing whose over or under strand loops straight back into it."""
    for xid in sorted(d.crossings):
        x = d.crossings[xid]
        a, b = x.over_in.arc, x.under_in.arc
        if d.successor(a) == b or d.successor(b) == a:
            return xid
    return None


def _remove_kink(d: Diagram, xid: str) -> Diagram:
    bld = DiagramBuilder.from_diagram(d)
    bld.delete_crossing(xid)
    bld.contract_joints()
    return bld.finalize()


def _over_ends(d: Diagram, x: Crossing) -> tuple[End, End]:
    return (x.over_in, End(d.successor(x.over_in.arc), 0))


def _under_ends(d: Diagram, x: Crossing) -> tuple[End, End]:
    return (x.under_in, End(d.successor(x.under_in.arc), 0))


def _find_bigon(d: Diagram) -> Optional[tuple[str, str]]:
    """Two crossings joined by a two-arc face with one strand over at both."""
    for face in d.faces():
        if len(face) != 2:
            continue
        e1, e2 = face
        a1, a2 = e1.arc, e2.arc
        if a1 == a2:
            continue
        v1, v2 = d.end_site(e1), d.end_site(e2)
        if v1 is None or v2 is None or v1[0] != "x" or v2[0] != "x" or v1 == v2:
            continue
        x1, x2 = d.crossings[v1[1]], d.crossings[v2[1]]
        # the arcs' far ends must sit at the opposite corners
        if d.end_site(End(a1, 1 - e1.end)) != v2:
            continue
        if d.end_site(End(a2, 1 - e2.end)) != v1:
            continue
        # a1 spans v2 -> v1 (arriving as e1), a2 spans v1 -> v2
        a1_at_v1, a1_at_v2 = e1, End(a1, 1 - e1.end)
        a2_at_v1, a2_at_v2 = End(a2, 1 - e2.end), e2

        def over(x: Crossing, e: End) -> bool:
            return e in _over_ends(d, x)

        a1_top = over(x1, a1_at_v1) and over(x2, a1_at_v2)
        a2_top = over(x1, a2_at_v1) and over(x2, a2_at_v2)
        if (a1_top or a2_top) and x1.sign == -x2.sign:
            return (x1.id, x2.id)
    return None


def _remove_bigon(d: Diagram, x1: str, x2: str) -> Diagram:
    bld = DiagramBuilder.from_diagram(d)
    bld.delete_crossing(x1)
    bld.delete_crossing(x2)
    bld.contract_joints()
    return bld.finalize()


def _find_zero_box(d: Diagram) -> Optional[str]:
    for bid in sorted(d.boxes):
        if d.boxes[bid].turns == 0:
            return bid
    return None


def _remove_zero_box(d: Diagram, bid: str) -> Diagram:
    bld = DiagramBuilder.from_diagram(d)
    bld.box_recs.pop(bid)
    bld.contract_joints()
    return bld.finalize()


def _find_box_merge(d: Diagram) -> Optional[tuple[str, str]]:
    """Two same-cell boxes stacked directly along the same strand pair."""
    two_faces = [
        {f[0].arc, f[1].arc} for f in d.faces() if len(f) == 2 and f[0].arc != f[1].arc
    ]
    for b1id in sorted(d.boxes):
        b1 = d.boxes[b1id]
        for b2id in sorted(d.boxes):
            if b2id == b1id:
                continue
            b2 = d.boxes[b2id]
            if b2.anti != b1.anti:
                continue
            if b1.anti:
                ca, cb = d.successor(b1.strands[0]), d.successor(b2.strands[1])
                adjacent = ca == b2.strands[0] and cb == b1.strands[1]
            else:
                ca, cb = d.successor(b1.strands[0]), d.successor(b1.strands[1])
                adjacent = ca == b2.strands[0] and cb == b2.strands[1]
            if adjacent and ca != cb and {ca, cb} in two_faces:
                return (b1id, b2id)
    return None


def _merge_boxes(d: Diagram, b1id: str, b2id: str) -> Diagram:
    bld = DiagramBuilder.from_diagram(d)
    b1, b2 = bld.box_recs[b1id], bld.box_recs.pop(b2id)
    b1["turns"] += b2["turns"]
    if b1["anti"]:
        # splice the descending connector away; the rename moves the kept
        # box's top entry arc into its strand slot
        bld.merge_at_head(b2["strands"][1])
    bld.contract_joints()
    return bld.finalize()


def _reduce_once(d: Diagram, log: Optional[Log]) -> Optional[Diagram]:
    """Apply one shrinking move, appending its description to ``log``."""
    xid = _find_kink(d)
    if xid is not None:
        out = _remove_kink(d, xid)
        if log is not None:
            log.append(("r1", xid))
        return out
    pair = _find_bigon(d)
    if pair is not None:
        out = _remove_bigon(d, *pair)
        if log is not None:
            log.append(("r2", pair[0], pair[1]))
        return out
    bid = _find_zero_box(d)
    if bid is not None:
        out = _remove_zero_box(d, bid)
        if log is not None:
            log.append(("box0", bid))
        return out
    bpair = _find_box_merge(d)
    if bpair is not None:
        out = _merge_boxes(d, *bpair)
        if log is not None:
            log.append(("boxmerge", bpair[0], bpair[1]))
        return out
    return None


# ---------------------------------------------------------------------------
# Triangle flips


def _in_end_at(d: Diagram, xid: str, end_at_x: End) -> End:
    """The incoming (head) end held by crossing ``xid`` for the strand germ
    passing through ``end_at_x``."""
    if end_at_x.end == 1:
        return end_at_x
    x = d.crossings[xid]
    for h in (x.over_in, x.under_in):
        if d.successor(h.arc) == end_at_x.arc:
            return h
    raise DiagramError(f"end {end_at_x} not wired through crossing {xid}")


def _triangle_faces(d: Diagram) -> list[list[End]]:
    out = []
    for face in d.faces():
        if len(face) != 3:
            continue
        sites = [d.end_site(e) for e in face]
        if any(s is None or s[0] != "x" for s in sites):
            continue
        if len({s[1] for s in sites}) != 3:
            continue
        if len({e.arc for e in face}) != 3:
            continue
        out.append(face)
    return out


def _triangle_movable(d: Diagram, face: list[End]) -> bool:
    """The three pairwise height relations admit a top/middle/bottom order."""
    over_count = {e.arc: 0 for e in face}
    for i in range(3):
        e_arr = face[i]
        e_dep_next = End(face[(i + 1) % 3].arc, 1 - face[(i + 1) % 3].end)
        xid = d.end_site(e_arr)[1]
        x = d.crossings[xid]
        side_i = _in_end_at(d, xid, e_arr)
        side_j = _in_end_at(d, xid, e_dep_next)
        if {side_i, side_j} != {x.over_in, x.under_in}:
            return False
        over_count[e_arr.arc if side_i == x.over_in else face[(i + 1) % 3].arc] += 1
    return sorted(over_count.values()) == [0, 1, 2]


def _apply_triangle(d: Diagram, face: list[End]) -> Diagram:
    """Flip a movable triangle to the other side of its three crossings.

    Along each of the three strands the two triangle crossings swap places;
    each crossing keeps its sign and its over/under strands, so only the
    held incoming ends change and the arc structure is untouched.
    """
    corners = [d.end_site(e)[1] for e in face]
    arr = [_in_end_at(d, corners[i], face[i]) for i in range(3)]
    dep = [
        _in_end_at(d, corners[(i - 1) % 3], End(face[i].arc, 1 - face[i].end))
        for i in range(3)
    ]
    new_crossings = dict(d.crossings)
    for i in range(3):
        x = d.crossings[corners[i]]
        # sides at corner i: strand of face[i] and strand of face[i+1]
        new_side_i = dep[i]
        new_side_j = arr[(i + 1) % 3]
        old_side_i = arr[i]
        if x.over_in == old_side_i:
            over_in, under_in = new_side_i, new_side_j
        else:
            over_in, under_in = new_side_j, new_side_i
        new_crossings[x.id] = Crossing(x.id, x.sign, over_in, under_in)
    return Diagram(
        list(d.components.values()),
        list(new_crossings.values()),
        list(d.boxes.values()),
        d.three_handles,
        d.four_handles,
        d.thru,
        d.marks,
        d.endpoints,
    )


def _flip_search(
    d: Diagram, depth: int, seen: set
) -> Optional[tuple[list[LogEntry], Diagram]]:
    """Depth-bounded search for triangle flips enabling a shrinking move."""
    for face in _triangle_faces(d):
        if not _triangle_movable(d, face):
            continue
        try:
            d2 = _apply_triangle(d, face)
        except DiagramError:
            continue
        fp = tuple(
            sorted(
                (x.id, x.sign, x.over_in, x.under_in) for x in d2.crossings.values()
            )
        )
        if fp in seen:
            continue
        entry = ("r3", tuple(d.end_site(e)[1] for e in face), tuple(e.arc for e in face))
        probe: Log = []
        d3 = _reduce_once(d2, probe)
        if d3 is not None:
            return ([entry] + probe, d3)
        if depth > 1:
            deeper = _flip_search(d2, depth - 1, seen | {fp})
            if deeper is not None:
                return ([entry] + deeper[0], deeper[1])
    return None


# ---------------------------------------------------------------------------
# Driver


def normalize(d: Diagram, log: Optional[Log] = None) -> Diagram:
    """Shrink ``d`` greedily; see the module docstring.

    ``log``, when given, collects one tuple per applied move:
    ``("r1", x)``, ``("r2", x, y)``, ``("r3", corners, arcs)``,
    ``("box0", b)``, ``("boxmerge", keep, gone)``.
    """
    d = _contracted(d)
    while True:
        nd = _reduce_once(d, log)
        if nd is not None:
            d = nd
            continue
        found = _flip_search(d, 3, set())
        if found is None:
            return d
        entries, d = found
        if log is not None:
            log.extend(entries)


# ---------------------------------------------------------------------------
# Canonical relabeling


def _component_key(d: Diagram, cid: str) -> tuple:
    """Label-independent ordering key for a component."""
    comp = d.components[cid]
    links = sorted(
        d.linking_number(cid, other) for other in d.components if other != cid
    )
    comp_marks = sorted(m.label for m in d.marks if m.comp == cid)
    arcs = set(comp.arcs)
    path_marks = sorted(
        m.label for m in d.marks if m.path and arcs & set(m.path_arcs())
    )
    thru_profile = sorted(
        (n if dc == cid else -n)
        for (dc, fc), n in d.thru.items()
        if cid in (dc, fc)
    )
    boxes = sorted(
        (b.turns, b.anti)
        for b in d.boxes.values()
        if any(s in arcs for s in b.strands)
    )
    endp = (
        sorted(k for k, e in d.endpoints.items() if e.arc in arcs)
        if d.endpoints
        else []
    )
    return (
        comp.kind,
        comp.framing if comp.framing is not None else 0,
        comp.orient,
        len(comp.arcs),
        d.writhe(cid),
        links,
        comp_marks,
        path_marks,
        thru_profile,
        boxes,
        endp,
    )


def _arc_descriptor(d: Diagram, arc: str) -> tuple:
    """Label-independent description of an arc's head attachment."""
    site = d.end_site(End(arc, 1))
    marks = sorted(
        (m.label, dr)
        for m in d.marks
        if m.path
        for (pa, dr) in m.path_steps()
        if pa == arc
    )
    if site is None:
        base: tuple = ("j",) if d.successor(arc) is not None else ("f",)
    elif site[0] == "x":
        x = d.crossings[site[1]]
        base = ("x", x.sign, "o" if x.over_in.arc == arc else "u")
    else:
        b = d.boxes[site[1]]
        base = ("b", b.turns, b.anti, b.strands.index(arc))
    return base + (tuple(marks),)


def _rotations(d: Diagram, comp: Component) -> list[int]:
    """Candidate start offsets for a component's cyclic arc list."""
    arcs = comp.arcs
    if d.endpoints is not None:
        eps = {e.arc for e in d.endpoints.values()}
        if any(a in eps for a in arcs):
            return [0]  # open strands have a fixed linear order
    descs = [_arc_descriptor(d, a) for a in arcs]
    n = len(descs)
    best = None
    offsets: list[int] = []
    for k in range(n):
        rot = tuple(descs[(k + i) % n] for i in range(n))
        if best is None or rot < best:
            best, offsets = rot, [k]
        elif rot == best:
            offsets.append(k)
    return offsets


def _relabel(
    d: Diagram, comp_order: list[str], offsets: dict[str, int]
) -> Diagram:
    cmap: dict[str, str] = {}
    amap: dict[str, str] = {}
    comps = []
    for i, cid in enumerate(comp_order, start=1):
        comp = d.components[cid]
        new_cid = f"c{i}"
        cmap[cid] = new_cid
        k = offsets[cid]
        arcs = [comp.arcs[(k + j) % len(comp.arcs)] for j in range(len(comp.arcs))]
        new_arcs = []
        for j, a in enumerate(arcs, start=1):
            amap[a] = f"{new_cid}a{j}"
            new_arcs.append(amap[a])
        comps.append(
            Component(new_cid, comp.kind, comp.framing, comp.orient, tuple(new_arcs))
        )
    xs = sorted(
        d.crossings.values(),
        key=lambda x: (amap[x.over_in.arc], x.over_in.end, amap[x.under_in.arc]),
    )
    crossings = [
        Crossing(
            f"x{i}",
            x.sign,
            End(amap[x.over_in.arc], x.over_in.end),
            End(amap[x.under_in.arc], x.under_in.end),
        )
        for i, x in enumerate(xs, start=1)
    ]
    bs = sorted(d.boxes.values(), key=lambda b: (amap[b.strands[0]], amap[b.strands[1]]))
    boxes = [
        TwistBox(f"t{i}", b.turns, (amap[b.strands[0]], amap[b.strands[1]]), b.anti)
        for i, b in enumerate(bs, start=1)
    ]
    thru = {(cmap[dc], cmap[fc]): n for (dc, fc), n in d.thru.items()}
    marks = [
        m
        if m.path == ()
        else MarkedCurve(
            m.label, None, tuple(path_entry(amap[pa], dr) for pa, dr in m.path_steps())
        )
        for m in (
            MarkedCurve(m.label, cmap[m.comp]) if m.comp is not None else m
            for m in d.marks
        )
    ]
    marks.sort(key=lambda m: m.label)
    endpoints = (
        {k: End(amap[e.arc], e.end) for k, e in d.endpoints.items()}
        if d.endpoints is not None
        else None
    )
    return Diagram(
        comps,
        crossings,
        boxes,
        d.three_handles,
        d.four_handles,
        thru,
        marks,
        endpoints,
    )


_COMBO_CAP = 4096


def canonical_relabel(d: Diagram) -> Diagram:
    """Rename everything into a label-independent normal form.

    Components are ordered by an invariant key (ties resolved by trying all
    orders in each tie group), each closed component's cyclic arc list is
    rotated to a minimal-descriptor start (ties enumerated), and the
    lexicographically least emitted text wins.
    """
    from .khd import emit_khd

    keys = {cid: _component_key(d, cid) for cid in d.components}
    cids = sorted(d.components, key=lambda c: (keys[c], c))
    groups: list[list[str]] = []
    for cid in cids:
        if groups and keys[groups[-1][0]] == keys[cid]:
            groups[-1].append(cid)
        else:
            groups.append([cid])

    order_choices = itertools.product(*(itertools.permutations(g) for g in groups))
    rot_choices = {cid: _rotations(d, d.components[cid]) for cid in cids}

    best_text: Optional[str] = None
    best: Optional[Diagram] = None
    combos = 0
    for ordering in order_choices:
        comp_order = [c for g in ordering for c in g]
        for offs in itertools.product(*(rot_choices[c] for c in comp_order)):
            combos += 1
            if combos > _COMBO_CAP:
                break
            cand = _relabel(d, comp_order, dict(zip(comp_order, offs)))
            text = emit_khd(cand)
            if best_text is None or text < best_text:
                best_text, best = text, cand
        if combos > _COMBO_CAP:
            break
    assert best is not None
    return best


def canonical_form(d: Diagram) -> str:
    """Canonical KHD text of the normalized diagram."""
    from .khd import emit_khd

    return emit_khd(canonical_relabel(normalize(d)))


def structural_equal(d1: Diagram, d2: Diagram) -> bool:
    """Equality after greedy simplification and canonical relabeling."""
    return canonical_form(d1) == canonical_form(d2)
