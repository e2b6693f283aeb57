"""Knot inputs for the constructors and the dissolver.

A knot here is a one-component, undecorated, closed ``Diagram``.  The module
provides a small catalog (built from braid closures and diagrammatic connected
sums), the mirror and crossing-change rewrites, and the two-point split of a
knot diagram into a four-ended tangle together with the plat closure that
undoes it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagram import (
    Component,
    Crossing,
    Diagram,
    DiagramError,
    End,
    PLAIN,
)

__all__ = [
    "KNOT_NAMES",
    "KnotInput",
    "braid_closure_knot",
    "connected_sum",
    "crossing_change",
    "default_cut",
    "knot",
    "mirror_knot",
    "split_to_tangle",
    "tangle_closure",
]


def _require_knot(d: Diagram, where: str) -> Component:
    if len(d.components) != 1:
        raise DiagramError(f"{where}: expected a one-component knot diagram")
    comp = next(iter(d.components.values()))
    if comp.kind != PLAIN:
        raise DiagramError(f"{where}: knot component must be plain, not {comp.kind}")
    if d.boxes or d.marks or d.thru or d.endpoints is not None:
        raise DiagramError(f"{where}: knot diagram must be undecorated")
    if d.three_handles or d.four_handles:
        raise DiagramError(f"{where}: knot diagram cannot carry handle counters")
    return comp


# ---------------------------------------------------------------------------
# Catalog


def braid_closure_knot(word: list[int], n_strands: int, cid: str = "K") -> Diagram:
    """Close the braid word; the closure must be a single knot.

    Generators ``+i``/``-i`` cross lanes ``i`` and ``i+1`` (1-based) with the
    left/right strand on top respectively.  Arcs are named ``k1..kN`` in travel
    order and crossings ``x1..xM`` in word order.
    """
    arcs: list[str] = []
    succ: dict[str, str] = {}
    serial = 0

    def new_arc() -> str:
        nonlocal serial
        serial += 1
        a = f"t{serial}"
        arcs.append(a)
        return a

    starts = [new_arc() for _ in range(n_strands)]
    cur = list(starts)
    raw_xs: list[tuple[str, int, str, str]] = []
    for k, g in enumerate(word, start=1):
        i = abs(g) - 1
        if not 0 <= i < n_strands - 1:
            raise DiagramError(f"braid generator {g} out of range")
        nl, nr = new_arc(), new_arc()
        if g > 0:
            raw_xs.append((f"x{k}", 1, cur[i], cur[i + 1]))
        else:
            raw_xs.append((f"x{k}", -1, cur[i + 1], cur[i]))
        succ[cur[i]] = nr
        succ[cur[i + 1]] = nl
        cur[i], cur[i + 1] = nl, nr
    for a, b in zip(cur, starts):
        succ[a] = b

    cycle = [starts[0]]
    while succ[cycle[-1]] != cycle[0]:
        cycle.append(succ[cycle[-1]])
    if len(cycle) != len(arcs):
        raise DiagramError("braid closure is a link, not a knot")
    rename = {old: f"k{n}" for n, old in enumerate(cycle, start=1)}
    xs = [
        Crossing(xid, sign, End(rename[o], 1), End(rename[u], 1))
        for xid, sign, o, u in raw_xs
    ]
    comp = Component(cid, PLAIN, None, 1, tuple(rename[a] for a in cycle))
    return Diagram([comp], xs)


def mirror_knot(d: Diagram) -> Diagram:
    """Mirror image: over and under swap at every crossing."""
    comp = _require_knot(d, "mirror_knot")
    xs = [
        Crossing(x.id, -x.sign, over_in=x.under_in, under_in=x.over_in)
        for x in d.crossings.values()
    ]
    return Diagram([comp], xs)


def connected_sum(d1: Diagram, d2: Diagram) -> Diagram:
    """Diagrammatic connected sum: splice the travel cycles of two knots.

    The second diagram's labels are prefixed to stay distinct; the result
    keeps the first diagram's component id and orientation.
    """
    c1 = _require_knot(d1, "connected_sum")
    c2 = _require_knot(d2, "connected_sum")
    taken_arcs = set(c1.arcs)
    taken_xs = set(d1.crossings)

    def fresh(name: str, taken: set[str]) -> str:
        out = "b" + name
        while out in taken:
            out = "b" + out
        taken.add(out)
        return out

    arc_map = {a: fresh(a, taken_arcs) for a in c2.arcs}
    xs = list(d1.crossings.values())
    for x in d2.crossings.values():
        xs.append(
            Crossing(
                fresh(x.id, taken_xs),
                x.sign,
                End(arc_map[x.over_in.arc], x.over_in.end),
                End(arc_map[x.under_in.arc], x.under_in.end),
            )
        )
    comp = Component(
        c1.id,
        PLAIN,
        None,
        c1.orient,
        tuple(c1.arcs) + tuple(arc_map[a] for a in c2.arcs),
    )
    return Diagram([comp], xs)


def _unknot(cid: str = "K") -> Diagram:
    return Diagram([Component(cid, PLAIN, None, 1, ("k1", "k2"))])


KNOT_NAMES = (
    "unknot",
    "trefoil",
    "trefoil_left",
    "figure_eight",
    "cinquefoil",
    "granny",
    "square",
)


def knot(name: str) -> Diagram:
    """A catalog diagram: braid closures plus two connected sums."""
    if name == "unknot":
        return _unknot()
    if name == "trefoil":
        return braid_closure_knot([1, 1, 1], 2)
    if name == "trefoil_left":
        return mirror_knot(braid_closure_knot([1, 1, 1], 2))
    if name == "figure_eight":
        return braid_closure_knot([1, -2, 1, -2], 3)
    if name == "cinquefoil":
        return braid_closure_knot([1, 1, 1, 1, 1], 2)
    if name == "granny":
        t = braid_closure_knot([1, 1, 1], 2)
        return connected_sum(t, t)
    if name == "square":
        t = braid_closure_knot([1, 1, 1], 2)
        return connected_sum(t, mirror_knot(t))
    raise DiagramError(f"unknown knot name {name!r}")


# ---------------------------------------------------------------------------
# Crossing changes


def crossing_change(d: Diagram, xid: str) -> Diagram:
    """Exchange over and under strands at one crossing (sign negates)."""
    comp = _require_knot(d, "crossing_change")
    if xid not in d.crossings:
        raise DiagramError(f"crossing_change: unknown crossing {xid}")
    xs = []
    for x in d.crossings.values():
        if x.id == xid:
            xs.append(Crossing(x.id, -x.sign, over_in=x.under_in, under_in=x.over_in))
        else:
            xs.append(x)
    return Diagram([comp], xs)


# ---------------------------------------------------------------------------
# Two-point split and plat closure


def default_cut(d: Diagram) -> tuple[str, str]:
    """Deterministic pair of cut arcs: the first arc and the one halfway."""
    comp = _require_knot(d, "default_cut")
    arcs = comp.arcs
    if len(arcs) < 2:
        raise DiagramError("default_cut: knot needs at least two arcs")
    return arcs[0], arcs[len(arcs) // 2]


def split_to_tangle(d: Diagram, cut: tuple[str, str]) -> Diagram:
    """Open a knot at two interior points into a four-ended tangle.

    Cutting inside arc ``a`` leaves ``a`` holding the tail side and a fresh
    arc holding the head side.  The two resulting open strands run from the
    NW corner to the NE corner and from the SE corner to the SW corner, so
    the left cap (NW-SW) re-fuses the first cut and the right cap (NE-SE)
    the second: ``tangle_closure`` undoes the split exactly.
    """
    comp = _require_knot(d, "split_to_tangle")
    a, b = cut
    if a == b:
        raise DiagramError("split_to_tangle: cut points must lie on distinct arcs")
    for arc in (a, b):
        if arc not in comp.arcs:
            raise DiagramError(f"split_to_tangle: arc {arc} is not on the knot")

    taken = set(comp.arcs)

    def head_arc(arc: str) -> str:
        out = arc + "h"
        while out in taken:
            out += "h"
        taken.add(out)
        return out

    a2, b2 = head_arc(a), head_arc(b)
    moved = {a: a2, b: b2}
    xs = [
        Crossing(
            x.id,
            x.sign,
            End(moved.get(x.over_in.arc, x.over_in.arc), 1),
            End(moved.get(x.under_in.arc, x.under_in.arc), 1),
        )
        for x in d.crossings.values()
    ]

    cyc = list(comp.arcs)
    i, j = cyc.index(a), cyc.index(b)

    def run(frm: int, to: int) -> list[str]:
        out = []
        k = (frm + 1) % len(cyc)
        while True:
            out.append(cyc[k])
            if k == to:
                return out
            k = (k + 1) % len(cyc)

    strand_p = [a2] + run(i, j)  # ends with b
    strand_q = [b2] + run(j, i)  # ends with a
    comps = [
        Component(comp.id + "a", PLAIN, None, comp.orient, tuple(strand_p)),
        Component(comp.id + "b", PLAIN, None, comp.orient, tuple(strand_q)),
    ]
    endpoints = {
        "NW": End(a2, 0),
        "SW": End(a, 1),
        "NE": End(b, 1),
        "SE": End(b2, 0),
    }
    return Diagram(comps, xs, endpoints=endpoints)


def tangle_closure(t: Diagram, cid: str = "K") -> Diagram:
    """Plat-close a four-ended tangle: cap NW to SW and NE to SE.

    Each cap joins a strand head to a strand tail; the closure must produce
    a single knot.
    """
    if t.endpoints is None:
        raise DiagramError("tangle_closure: diagram has no endpoints")
    succ: dict[str, str] = {}
    comps = list(t.components.values())
    for comp in comps:
        if comp.kind != PLAIN:
            raise DiagramError("tangle_closure: tangle strands must be plain")
        for x, y in zip(comp.arcs, comp.arcs[1:]):
            succ[x] = y
    for c1, c2 in (("NW", "SW"), ("NE", "SE")):
        e1, e2 = t.endpoints[c1], t.endpoints[c2]
        if {e1.end, e2.end} != {0, 1}:
            raise DiagramError(
                f"tangle_closure: cap {c1}-{c2} would join two strand "
                f"{'heads' if e1.end else 'tails'}"
            )
        head, tail = (e1, e2) if e1.end == 1 else (e2, e1)
        succ[head.arc] = tail.arc

    all_arcs = [a for comp in comps for a in comp.arcs]
    start = min(all_arcs)
    cycle = [start]
    while succ[cycle[-1]] != start:
        cycle.append(succ[cycle[-1]])
        if len(cycle) > len(all_arcs):
            raise DiagramError("tangle_closure: caps do not close into one cycle")
    if len(cycle) != len(all_arcs):
        raise DiagramError("tangle_closure: closure is not a single knot")
    orient = comps[0].orient
    comp = Component(cid, PLAIN, None, orient, tuple(cycle))
    return Diagram([comp], list(t.crossings.values()))


# ---------------------------------------------------------------------------
# Knot input


@dataclass(frozen=True)
class KnotInput:
    """A knot diagram plus the two-arc cut used to open it into a tangle."""

    diagram: Diagram
    cut: tuple[str, str]

    def __post_init__(self) -> None:
        split_to_tangle(self.diagram, self.cut)  # validates diagram and cut

    @classmethod
    def from_name(cls, name: str) -> "KnotInput":
        d = knot(name)
        return cls(d, default_cut(d))

    @property
    def tangle(self) -> Diagram:
        return split_to_tangle(self.diagram, self.cut)
