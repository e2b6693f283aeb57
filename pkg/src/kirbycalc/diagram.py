"""Planar diagram model for framed-link handle pictures.

A diagram is a combinatorial planar link diagram decorated with the extra
structure used in handle calculus for smooth 4-manifolds:

* components are closed curves (or open strands, for tangle fragments) and
  carry a decoration: ``dotted`` (a carved 1-handle), ``framed <n>`` (a
  2-handle with integer framing) or ``plain`` (an undecorated curve, e.g. a
  knot input or an annotated longitude);
* crossings carry a sign and a rotation system, so the diagram knows its
  planar embedding combinatorially;
* twist boxes stand for ``turns`` full twists on a pair of parallel strands
  (positive = right-handed) and are expanded on demand;
* counters record how many 3-handles and 4-handles are attached on top of the
  picture;
* a pass-through table records, for every (dotted, framed) pair, how many
  times the framed handle's attaching circle runs algebraically through the
  dotted circle's spanning disk;
* marked curves give stable names (``a``, ``b``, ``c``, ``gamma_minus`` ...)
  to distinguished curves or positions.

Everything is exact: framings, signs, counters and pass-through counts are
Python integers, and all derived quantities (writhe, linking numbers, faces,
genus) are computed by exact combinatorics.

Diagrams are immutable values: every operation that changes a diagram returns
a new one.  The mutable :class:`DiagramBuilder` is the internal surgery
kernel used by the move engine to assemble new diagrams; it finalizes into a
validated :class:`Diagram`.

Conventions
-----------

Arcs are directed; ``arc.0`` is the tail end and ``arc.1`` the head end.  The
arcs of a component are listed in cyclic order of travel; consecutive arcs
either meet at a crossing/box or join directly (a plain joint).  A crossing
stores the two *incoming* arc ends (the over strand's and the under strand's);
the outgoing ends are the successors in the component order.

Crossing signs use the determinant convention: the sign is ``+1`` when the
under strand's outgoing direction is 90 degrees counterclockwise from the over
strand's outgoing direction.  Equivalently, listing the four arc ends
counterclockwise starting at the over-in end gives

* ``[over_in, under_in, over_out, under_out]`` for sign ``+1``,
* ``[over_in, under_out, over_out, under_in]`` for sign ``-1``.

Stored signs refer to the natural travel direction of the arc lists.  Each
component carries an ``orient`` flag (+1/-1); flipping it reverses the
component's effective orientation without rewriting the diagram, which negates
its linking numbers with other components and leaves writhes unchanged.

A twist box is a fixed planar cell: its two strands enter on the same side,
first strand on the inner lane, second on the outer lane, both traveling
forward; ``turns`` full twists between them expand to ``2*|turns|`` crossings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Optional, Sequence


DOTTED = "dotted"
FRAMED = "framed"
PLAIN = "plain"

_KINDS = (DOTTED, FRAMED, PLAIN)


class DiagramError(ValueError):
    """Raised when diagram data is malformed or an operation is illegal."""


# ---------------------------------------------------------------------------
# Arc ends


@dataclass(frozen=True, order=True)
class End:
    """One end of a directed arc: ``End(arc, 0)`` tail, ``End(arc, 1)`` head."""

    arc: str
    end: int

    def __post_init__(self) -> None:
        if self.end not in (0, 1):
            raise DiagramError(f"arc end must be 0 or 1, got {self.end!r}")

    def __str__(self) -> str:
        return f"{self.arc}.{self.end}"

    @staticmethod
    def parse(text: str) -> "End":
        arc, dot, end = text.rpartition(".")
        if not dot or end not in ("0", "1"):
            raise DiagramError(f"bad arc-end reference {text!r}")
        return End(arc, int(end))


# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class Component:
    """A decorated curve of the diagram.

    ``arcs`` is the cyclic travel order for closed components, or the path
    order (first tail and last head free) for open strands of a tangle.
    """

    id: str
    kind: str
    framing: Optional[int]
    orient: int
    arcs: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise DiagramError(f"unknown component kind {self.kind!r}")
        if self.kind == FRAMED and not isinstance(self.framing, int):
            raise DiagramError(f"framed component {self.id} needs an integer framing")
        if self.kind != FRAMED and self.framing is not None:
            raise DiagramError(f"{self.kind} component {self.id} cannot carry a framing")
        if self.orient not in (1, -1):
            raise DiagramError(f"orient must be +1/-1, got {self.orient!r}")
        if not self.arcs:
            raise DiagramError(f"component {self.id} has no arcs")


@dataclass(frozen=True)
class Crossing:
    """A transverse double point with over/under data.

    ``over_in`` and ``under_in`` are the incoming (head) arc ends of the over
    and under strands; the outgoing arcs are their successors in component
    order.  ``sign`` is the crossing sign for the natural travel directions.
    """

    id: str
    sign: int
    over_in: End
    under_in: End

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise DiagramError(f"crossing {self.id}: sign must be +1/-1")
        if self.over_in.end != 1 or self.under_in.end != 1:
            raise DiagramError(f"crossing {self.id}: incoming references must be head ends")


@dataclass(frozen=True)
class TwistBox:
    """``turns`` full twists (positive = right-handed) on a pair of strands.

    ``strands`` lists the two incoming arcs (their heads stop at the box); the
    strands continue with the successor arcs on the far side.  With
    ``anti=False`` both strands enter on the same side and travel in parallel
    through the cell (first strand on the inner lane); with ``anti=True`` they
    enter on opposite sides and run antiparallel, as the two legs of a band
    do.  Right-handed twists give positive crossings in the parallel cell and
    negative crossings in the antiparallel cell.
    """

    id: str
    turns: int
    strands: tuple[str, str]
    anti: bool = False

    def __post_init__(self) -> None:
        if len(self.strands) != 2 or self.strands[0] == self.strands[1]:
            raise DiagramError(f"box {self.id}: needs exactly two distinct strand arcs")


def path_step(entry: str) -> tuple[str, int]:
    """Split a mark-path entry into (arc id, direction ±1).

    A trailing ``:+``/``:-`` states the direction the curve rides the arc;
    bare entries ride forward.
    """
    if entry.endswith(":+"):
        return entry[:-2], 1
    if entry.endswith(":-"):
        return entry[:-2], -1
    if ":" in entry:
        raise DiagramError(f"bad path entry {entry!r}")
    return entry, 1


def path_entry(arc: str, direction: int) -> str:
    return arc if direction > 0 else f"{arc}:-"


@dataclass(frozen=True)
class MarkedCurve:
    """A labeled curve: either a whole component or a path of existing arcs."""

    label: str
    comp: Optional[str] = None
    path: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.label:
            raise DiagramError("marked curve needs a label")
        if (self.comp is None) == (not self.path):
            raise DiagramError(f"mark {self.label}: exactly one of comp/path required")
        if self.path:
            norm = tuple(path_entry(*path_step(p)) for p in self.path)
            object.__setattr__(self, "path", norm)

    def path_steps(self) -> tuple[tuple[str, int], ...]:
        """(arc id, direction) pairs along the curve."""
        return tuple(path_step(p) for p in self.path)

    def path_arcs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.path_steps())


ENDPOINT_CORNERS = ("NW", "NE", "SW", "SE")


# ---------------------------------------------------------------------------
# Attachment map

# Vertex kinds in the derived rotation system.
_VX = "x"  # crossing: slots 0..3, CCW, over_in at slot 0
_VBOX = "box"  # box cell: slots 0..3 CCW = [a_in, a_out, b_out, b_in]
_VJOINT = "joint"  # plain joint: slots 0..1 = [in(head), out(tail)]


@dataclass(frozen=True)
class _Site:
    kind: str
    vertex: str
    slot: int


class Diagram:
    """Immutable decorated planar diagram.  See the module docstring."""

    __slots__ = (
        "components",
        "crossings",
        "boxes",
        "three_handles",
        "four_handles",
        "thru",
        "marks",
        "endpoints",
        "_arc_comp",
        "_succ",
        "_pred",
        "_sites",
        "_free_ends",
    )

    def __init__(
        self,
        components: Sequence[Component],
        crossings: Sequence[Crossing] = (),
        boxes: Sequence[TwistBox] = (),
        three_handles: int = 0,
        four_handles: int = 0,
        thru: Optional[Mapping[tuple[str, str], int]] = None,
        marks: Sequence[MarkedCurve] = (),
        endpoints: Optional[Mapping[str, End]] = None,
        validate: bool = True,
    ) -> None:
        object.__setattr__(self, "components", {c.id: c for c in components})
        object.__setattr__(self, "crossings", {x.id: x for x in crossings})
        object.__setattr__(self, "boxes", {b.id: b for b in boxes})
        object.__setattr__(self, "three_handles", int(three_handles))
        object.__setattr__(self, "four_handles", int(four_handles))
        object.__setattr__(
            self, "thru", {k: int(v) for k, v in (thru or {}).items() if int(v) != 0}
        )
        object.__setattr__(self, "marks", tuple(marks))
        object.__setattr__(
            self, "endpoints", dict(endpoints) if endpoints is not None else None
        )
        if len(self.components) != len(components):
            raise DiagramError("duplicate component id")
        if len(self.crossings) != len(crossings):
            raise DiagramError("duplicate crossing id")
        if len(self.boxes) != len(boxes):
            raise DiagramError("duplicate box id")
        self._index()
        if validate:
            self._validate()

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Diagram is immutable")

    # -- indexing -----------------------------------------------------------

    def _index(self) -> None:
        arc_comp: dict[str, str] = {}
        succ: dict[str, str] = {}
        pred: dict[str, str] = {}
        free: set[End] = set()
        for comp in self.components.values():
            open_strand = self._is_open(comp)
            arcs = comp.arcs
            for a in arcs:
                if a in arc_comp:
                    raise DiagramError(f"arc {a} listed twice")
                arc_comp[a] = comp.id
            for i, a in enumerate(arcs):
                if i + 1 < len(arcs):
                    succ[a] = arcs[i + 1]
                    pred[arcs[i + 1]] = a
                elif not open_strand:
                    succ[a] = arcs[0]
                    pred[arcs[0]] = a
            if open_strand:
                free.add(End(arcs[0], 0))
                free.add(End(arcs[-1], 1))
        object.__setattr__(self, "_arc_comp", arc_comp)
        object.__setattr__(self, "_succ", succ)
        object.__setattr__(self, "_pred", pred)
        object.__setattr__(self, "_free_ends", free)

        sites: dict[End, _Site] = {}

        def attach(end: End, site: _Site) -> None:
            if end.arc not in arc_comp:
                raise DiagramError(f"reference to unknown arc {end.arc}")
            if end in sites:
                raise DiagramError(f"arc end {end} attached twice")
            if end in free:
                raise DiagramError(f"arc end {end} is a free endpoint but also attached")
            sites[end] = site

        for x in self.crossings.values():
            o_out, u_out = self._outs(x)
            attach(x.over_in, _Site(_VX, x.id, 0))
            attach(o_out, _Site(_VX, x.id, 2))
            if x.sign > 0:
                attach(x.under_in, _Site(_VX, x.id, 1))
                attach(u_out, _Site(_VX, x.id, 3))
            else:
                attach(x.under_in, _Site(_VX, x.id, 3))
                attach(u_out, _Site(_VX, x.id, 1))
        for b in self.boxes.values():
            a_in, b_in = b.strands
            attach(End(a_in, 1), _Site(_VBOX, b.id, 0))
            attach(End(self._succ_arc(a_in, b.id), 0), _Site(_VBOX, b.id, 1))
            if b.anti:
                attach(End(b_in, 1), _Site(_VBOX, b.id, 2))
                attach(End(self._succ_arc(b_in, b.id), 0), _Site(_VBOX, b.id, 3))
            else:
                attach(End(self._succ_arc(b_in, b.id), 0), _Site(_VBOX, b.id, 2))
                attach(End(b_in, 1), _Site(_VBOX, b.id, 3))
        object.__setattr__(self, "_sites", sites)

    def _is_open(self, comp: Component) -> bool:
        if self.endpoints is None:
            return False
        eps = {e.arc for e in self.endpoints.values()}
        return any(a in eps for a in comp.arcs)

    def _succ_arc(self, arc: str, where: str) -> str:
        try:
            return self._succ[arc]
        except KeyError:
            raise DiagramError(f"{where}: arc {arc} has no successor") from None

    def _outs(self, x: Crossing) -> tuple[End, End]:
        return (
            End(self._succ_arc(x.over_in.arc, f"crossing {x.id}"), 0),
            End(self._succ_arc(x.under_in.arc, f"crossing {x.id}"), 0),
        )

    # -- public accessors ---------------------------------------------------

    def component_of(self, arc: str) -> str:
        return self._arc_comp[arc]

    def end_site(self, e: End) -> Optional[tuple[str, str]]:
        """(vertex kind, vertex id) holding this arc end, or None for joints."""
        s = self._sites.get(e)
        if s is None:
            return None
        return (s.kind, s.vertex)

    def successor(self, arc: str) -> Optional[str]:
        return self._succ.get(arc)

    def predecessor(self, arc: str) -> Optional[str]:
        return self._pred.get(arc)

    def crossing_rotation(self, x: Crossing) -> tuple[End, End, End, End]:
        """The four arc ends CCW starting at over-in."""
        o_out, u_out = self._outs(x)
        if x.sign > 0:
            return (x.over_in, x.under_in, o_out, u_out)
        return (x.over_in, u_out, o_out, x.under_in)

    def crossing_comps(self, x: Crossing) -> tuple[str, str]:
        """(over component, under component) of a crossing."""
        return (self._arc_comp[x.over_in.arc], self._arc_comp[x.under_in.arc])

    def effective_sign(self, x: Crossing) -> int:
        """Crossing sign with the components' orient flags applied."""
        oc, uc = self.crossing_comps(x)
        return x.sign * self.components[oc].orient * self.components[uc].orient

    def decorated(self) -> list[Component]:
        return [c for c in self.components.values() if c.kind in (DOTTED, FRAMED)]

    def dotted(self) -> list[Component]:
        return [c for c in self.components.values() if c.kind == DOTTED]

    def framed(self) -> list[Component]:
        return [c for c in self.components.values() if c.kind == FRAMED]

    def euler_characteristic(self) -> int:
        """Euler characteristic of the 4-manifold the diagram encodes.

        One 0-handle, a 1-handle per dotted circle, a 2-handle per framed
        component, plus the 3-/4-handle counters.
        """
        return (
            1
            - len(self.dotted())
            + len(self.framed())
            - self.three_handles
            + self.four_handles
        )

    def thru_count(self, dotted_id: str, framed_id: str) -> int:
        return self.thru.get((dotted_id, framed_id), 0)

    def mark(self, label: str) -> Optional[MarkedCurve]:
        for m in self.marks:
            if m.label == label:
                return m
        return None

    def is_tangle(self) -> bool:
        return self.endpoints is not None

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        comp_ids = set(self.components)
        for comp in self.components.values():
            if comp.kind == FRAMED:
                pass
        # every arc head/tail is attached, free, or a plain joint; the
        # successor relation through a vertex must use the same vertex.
        for arc, nxt in self._succ.items():
            h, t = End(arc, 1), End(nxt, 0)
            hs, ts = self._sites.get(h), self._sites.get(t)
            if (hs is None) != (ts is None):
                raise DiagramError(
                    f"arcs {arc}->{nxt}: one side attached, the other a joint"
                )
            if hs is not None and ts is not None:
                if hs.vertex != ts.vertex or hs.kind != ts.kind:
                    raise DiagramError(
                        f"arcs {arc}->{nxt} attach to different vertices"
                    )
                if hs.kind == _VX and (hs.slot, ts.slot) not in ((0, 2), (1, 3), (3, 1)):
                    raise DiagramError(
                        f"arcs {arc}->{nxt}: inconsistent pass through crossing {hs.vertex}"
                    )
                if hs.kind == _VBOX and (hs.slot, ts.slot) not in (
                    (0, 1),
                    (3, 2),
                    (2, 3),
                ):
                    raise DiagramError(
                        f"arcs {arc}->{nxt}: inconsistent pass through box {hs.vertex}"
                    )
        # no stray attachments: every attached end's arc must have the
        # matching successor/predecessor present (guaranteed by _index), and
        # free ends only in tangles.
        if self.endpoints is not None:
            if set(self.endpoints) != set(ENDPOINT_CORNERS):
                raise DiagramError("endpoints must name NW, NE, SW, SE")
            listed = set(self.endpoints.values())
            if listed != self._free_ends:
                raise DiagramError(
                    "endpoint records do not match the free ends of the open strands"
                )
            if len(listed) != 4:
                raise DiagramError("a tangle needs four distinct free ends")
        for (d, f), n in self.thru.items():
            if d not in comp_ids or self.components[d].kind != DOTTED:
                raise DiagramError(f"thru row {d} is not a dotted component")
            if f not in comp_ids or self.components[f].kind != FRAMED:
                raise DiagramError(f"thru column {f} is not a framed component")
        for m in self.marks:
            if m.comp is not None and m.comp not in comp_ids:
                raise DiagramError(f"mark {m.label}: unknown component {m.comp}")
            for a in m.path_arcs():
                if a not in self._arc_comp:
                    raise DiagramError(f"mark {m.label}: unknown arc {a}")
        if self.four_handles not in (0, 1):
            raise DiagramError("four_handles must be 0 or 1")
        if self.three_handles < 0:
            raise DiagramError("three_handles must be non-negative")
        self._check_planar()

    # -- rotation system / faces / genus ------------------------------------

    def _vertex_slots(self) -> dict[tuple[str, str], list[Optional[End]]]:
        """All rotation-system vertices (crossings, boxes, joints) -> slot ends."""
        slots: dict[tuple[str, str], list[Optional[End]]] = {}
        for x in self.crossings.values():
            # crossing_rotation lists the four ends CCW from over_in, which
            # is exactly the slot order used by the attachment map
            slots[(_VX, x.id)] = list(self.crossing_rotation(x))
        for b in self.boxes.values():
            a_in, b_in = b.strands
            if b.anti:
                slots[(_VBOX, b.id)] = [
                    End(a_in, 1),
                    End(self._succ[a_in], 0),
                    End(b_in, 1),
                    End(self._succ[b_in], 0),
                ]
            else:
                slots[(_VBOX, b.id)] = [
                    End(a_in, 1),
                    End(self._succ[a_in], 0),
                    End(self._succ[b_in], 0),
                    End(b_in, 1),
                ]
        jn = 0
        for arc, nxt in self._succ.items():
            h = End(arc, 1)
            if h not in self._sites:
                slots[(_VJOINT, f"j{jn}")] = [h, End(nxt, 0)]
                jn += 1
        return slots

    def faces(self) -> list[list[End]]:
        """Faces of the combinatorial embedding, as lists of traversed ends.

        Each face is the cyclic list of arc ends encountered while walking the
        face boundary (turning one slot at every vertex).  Tangle fragments
        trace faces of the fragment with the free ends acting as reflectors.
        """
        slots = self._vertex_slots()
        where: dict[End, tuple[tuple[str, str], int]] = {}
        for v, ends in slots.items():
            for i, e in enumerate(ends):
                if e is not None:
                    where[e] = (v, i)

        # darts: (arc, direction); direction 1 = along the arc (tail->head)
        def step(dart: tuple[str, int]) -> tuple[str, int]:
            arc, d = dart
            arrive = End(arc, 1 if d == 1 else 0)
            if arrive in self._free_ends:
                return (arc, -d)  # bounce at a free end
            v, i = where[arrive]
            ends = slots[v]
            n = len(ends)
            leave = ends[(i + 1) % n]
            # leave travels away from v: tail end -> forward, head -> backward
            return (leave.arc, 1 if leave.end == 0 else -1)

        faces: list[list[End]] = []
        seen: set[tuple[str, int]] = set()
        for arc in self._arc_comp:
            for d in (1, -1):
                start = (arc, d)
                if start in seen:
                    continue
                face: list[End] = []
                cur = start
                while True:
                    seen.add(cur)
                    face.append(End(cur[0], 1 if cur[1] == 1 else 0))
                    cur = step(cur)
                    if cur == start:
                        break
                faces.append(face)
        return faces

    def genus_by_piece(self) -> list[int]:
        """Genus of each connected piece of the underlying 4-valent graph."""
        slots = self._vertex_slots()
        parent: dict[str, str] = {}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x: str, y: str) -> None:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry

        for arc in self._arc_comp:
            parent[f"a:{arc}"] = f"a:{arc}"
        for v, ends in slots.items():
            key = f"v:{v[0]}:{v[1]}"
            parent[key] = key
            for e in ends:
                if e is not None:
                    union(key, f"a:{e.arc}")

        piece_of_arc = {arc: find(f"a:{arc}") for arc in self._arc_comp}
        V: dict[str, int] = {}
        E: dict[str, int] = {}
        F: dict[str, int] = {}
        for v, ends in slots.items():
            root = find(f"v:{v[0]}:{v[1]}")
            V[root] = V.get(root, 0) + 1
        # a free end caps its strand: a degree-1 vertex of the graph
        for e in self._free_ends:
            root = piece_of_arc[e.arc]
            V[root] = V.get(root, 0) + 1
        for arc in self._arc_comp:
            root = piece_of_arc[arc]
            E[root] = E.get(root, 0) + 1
        for face in self.faces():
            root = piece_of_arc[face[0].arc]
            F[root] = F.get(root, 0) + 1
        genera = []
        for root in E:
            chi = V.get(root, 0) - E[root] + F.get(root, 0)
            # closed surface piece: chi = 2 - 2g; fragments with free ends
            # bounce, which still yields an even defect.
            g2 = 2 - chi
            if g2 % 2:
                raise DiagramError("inconsistent rotation system")
            genera.append(g2 // 2)
        return genera

    def _check_planar(self) -> None:
        if self.endpoints is not None:
            # fragment: planarity is checked on the plat closure by the tangle
            # utilities; the bounce-face computation must still be consistent.
            for g in self.genus_by_piece():
                if g != 0:
                    raise DiagramError("tangle fragment is not planar")
            return
        for g in self.genus_by_piece():
            if g != 0:
                raise DiagramError("diagram embedding has positive genus")

    # -- box expansion ------------------------------------------------------

    def expand_boxes(self) -> "Diagram":
        """Replace every twist box by explicit crossings.

        Each full twist becomes two half-twist crossings between the two
        strands; right-handed twists (positive turns) make the outer strand
        cross over first, which yields positive crossings when both strands
        run in parallel directions.
        """
        if not self.boxes:
            return self
        bld = DiagramBuilder.from_diagram(self)
        for b in list(self.boxes.values()):
            bld.expand_box(b.id)
        return bld.finalize(validate=True)

    # -- writhe / linking ---------------------------------------------------

    def writhe(self, comp_id: str) -> int:
        """Signed self-crossing count of a component (boxes expanded)."""
        d = self.expand_boxes()
        if comp_id not in d.components:
            raise DiagramError(f"unknown component {comp_id}")
        w = 0
        for x in d.crossings.values():
            oc, uc = d.crossing_comps(x)
            if oc == uc == comp_id:
                w += x.sign
        return w

    def linking_number(self, c1: str, c2: str) -> int:
        """Half the signed count of crossings between two distinct components."""
        if c1 == c2:
            raise DiagramError("linking number needs two distinct components")
        d = self.expand_boxes()
        for c in (c1, c2):
            if c not in d.components:
                raise DiagramError(f"unknown component {c}")
        total = 0
        for x in d.crossings.values():
            oc, uc = d.crossing_comps(x)
            if {oc, uc} == {c1, c2}:
                total += d.effective_sign(x)
        if total % 2:
            raise DiagramError("odd inter-component crossing sum")
        return total // 2

    def total_crossings(self) -> int:
        """Crossing count with boxes expanded."""
        return len(self.crossings) + sum(2 * abs(b.turns) for b in self.boxes.values())

    # -- simple rebuilders ---------------------------------------------------

    def with_counters(self, three_handles=None, four_handles=None) -> "Diagram":
        return Diagram(
            list(self.components.values()),
            list(self.crossings.values()),
            list(self.boxes.values()),
            self.three_handles if three_handles is None else three_handles,
            self.four_handles if four_handles is None else four_handles,
            self.thru,
            self.marks,
            self.endpoints,
        )

    def with_marks(self, marks: Sequence[MarkedCurve]) -> "Diagram":
        return Diagram(
            list(self.components.values()),
            list(self.crossings.values()),
            list(self.boxes.values()),
            self.three_handles,
            self.four_handles,
            self.thru,
            marks,
            self.endpoints,
        )

    def reverse_orientation(self, comp_id: str) -> "Diagram":
        """Flip the effective orientation flag of one component."""
        if comp_id not in self.components:
            raise DiagramError(f"unknown component {comp_id}")
        comps = [
            replace(c, orient=-c.orient) if c.id == comp_id else c
            for c in self.components.values()
        ]
        return Diagram(
            comps,
            list(self.crossings.values()),
            list(self.boxes.values()),
            self.three_handles,
            self.four_handles,
            self.thru,
            self.marks,
            self.endpoints,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Diagram):
            return NotImplemented
        return (
            self.components == other.components
            and self.crossings == other.crossings
            and self.boxes == other.boxes
            and self.three_handles == other.three_handles
            and self.four_handles == other.four_handles
            and self.thru == other.thru
            and self.marks == other.marks
            and self.endpoints == other.endpoints
        )

    def __hash__(self) -> int:  # identity-ish hashing is enough
        return hash(
            (
                tuple(self.components),
                tuple(self.crossings),
                tuple(self.boxes),
                self.three_handles,
                self.four_handles,
            )
        )

    def __repr__(self) -> str:
        return (
            f"<Diagram comps={len(self.components)} x={len(self.crossings)} "
            f"boxes={len(self.boxes)} 3h={self.three_handles} 4h={self.four_handles}>"
        )


# ---------------------------------------------------------------------------
# Builder: the mutable surgery kernel


class DiagramBuilder:
    """Mutable workspace for assembling and rewiring diagrams.

    Arcs are kept as records with explicit successor pointers; crossings and
    boxes reference incoming arcs.  ``finalize`` traces the strands into
    components and returns a validated :class:`Diagram`.

    The builder is the only place where diagrams are mutated; move functions
    copy a diagram in, rewire, and finalize out.
    """

    def __init__(self) -> None:
        self.comp_meta: dict[str, dict] = {}  # id -> kind/framing/orient
        self.comp_order: list[str] = []
        self.arc_comp: dict[str, str] = {}
        self.succ: dict[str, Optional[str]] = {}
        self.crossings: dict[str, dict] = {}  # id -> sign/over_in/under_in (arc ids)
        self.box_recs: dict[str, dict] = {}  # id -> turns/strands
        self.three_handles = 0
        self.four_handles = 0
        self.thru: dict[tuple[str, str], int] = {}
        self.marks: list[MarkedCurve] = []
        self.endpoints: Optional[dict[str, End]] = None
        self.start_arc: dict[str, str] = {}  # preferred first arc per component
        self._n = itertools.count()

    # -- construction helpers ----------------------------------------------

    def fresh(self, prefix: str) -> str:
        used = (
            self.arc_comp.keys()
            | self.crossings.keys()
            | self.box_recs.keys()
            | self.comp_meta.keys()
        )
        while True:
            cand = f"{prefix}{next(self._n)}"
            if cand not in used:
                return cand

    def add_component(
        self, kind: str, framing: Optional[int] = None, orient: int = 1, cid: Optional[str] = None
    ) -> str:
        cid = cid or self.fresh("c")
        if cid in self.comp_meta:
            raise DiagramError(f"component {cid} already exists")
        self.comp_meta[cid] = {"kind": kind, "framing": framing, "orient": orient}
        self.comp_order.append(cid)
        return cid

    def add_arc(self, comp: str, aid: Optional[str] = None) -> str:
        aid = aid or self.fresh("a")
        if aid in self.arc_comp:
            raise DiagramError(f"arc {aid} already exists")
        if comp not in self.comp_meta:
            raise DiagramError(f"unknown component {comp}")
        self.arc_comp[aid] = comp
        self.succ[aid] = None
        return aid

    def connect(self, a: str, b: str) -> None:
        """Join a's head to b's tail (plain joint or via a vertex added later)."""
        self.succ[a] = b

    def add_crossing(self, over_in: str, under_in: str, sign: int, xid: Optional[str] = None) -> str:
        xid = xid or self.fresh("x")
        if xid in self.crossings:
            raise DiagramError(f"crossing {xid} already exists")
        self.crossings[xid] = {"sign": sign, "over_in": over_in, "under_in": under_in}
        return xid

    def add_box(
        self,
        strand_a: str,
        strand_b: str,
        turns: int,
        bid: Optional[str] = None,
        anti: bool = False,
    ) -> str:
        bid = bid or self.fresh("b")
        if bid in self.box_recs:
            raise DiagramError(f"box {bid} already exists")
        self.box_recs[bid] = {
            "turns": turns,
            "strands": (strand_a, strand_b),
            "anti": anti,
        }
        return bid

    # -- import/export ------------------------------------------------------

    @classmethod
    def from_diagram(cls, d: Diagram) -> "DiagramBuilder":
        bld = cls()
        for comp in d.components.values():
            bld.add_component(comp.kind, comp.framing, comp.orient, comp.id)
            bld.start_arc[comp.id] = comp.arcs[0]
            for a in comp.arcs:
                bld.arc_comp[a] = comp.id
                bld.succ[a] = None
            for a in comp.arcs:
                s = d.successor(a)
                if s is not None:
                    bld.succ[a] = s
        for x in d.crossings.values():
            bld.crossings[x.id] = {
                "sign": x.sign,
                "over_in": x.over_in.arc,
                "under_in": x.under_in.arc,
            }
        for b in d.boxes.values():
            bld.box_recs[b.id] = {
                "turns": b.turns,
                "strands": b.strands,
                "anti": b.anti,
            }
        bld.three_handles = d.three_handles
        bld.four_handles = d.four_handles
        bld.thru = dict(d.thru)
        bld.marks = list(d.marks)
        bld.endpoints = dict(d.endpoints) if d.endpoints is not None else None
        return bld

    # -- surgery primitives --------------------------------------------------

    def split_arc(self, arc: str) -> str:
        """Cut ``arc`` at an interior point.

        ``arc`` keeps its tail and gains a joint to a new arc carrying the old
        head (so every reference to the head end must move to the new arc).
        Returns the new arc id.
        """
        comp = self.arc_comp[arc]
        new = self.add_arc(comp)
        self.succ[new] = self.succ[arc]
        self.succ[arc] = new
        # move head references
        for x in self.crossings.values():
            if x["over_in"] == arc:
                x["over_in"] = new
            if x["under_in"] == arc:
                x["under_in"] = new
        for b in self.box_recs.values():
            sa, sb = b["strands"]
            b["strands"] = (new if sa == arc else sa, new if sb == arc else sb)
        if self.endpoints:
            for k, e in list(self.endpoints.items()):
                if e.arc == arc and e.end == 1:
                    self.endpoints[k] = End(new, 1)

        def _split_entry(p: str) -> tuple[str, ...]:
            pa, pd = path_step(p)
            if pa != arc:
                return (p,)
            # riding forward meets the tail half first, backward the head half
            if pd > 0:
                return (path_entry(arc, 1), path_entry(new, 1))
            return (path_entry(new, -1), path_entry(arc, -1))

        self.marks = [
            m
            if not m.path or arc not in m.path_arcs()
            else MarkedCurve(
                m.label,
                None,
                tuple(itertools.chain.from_iterable(_split_entry(p) for p in m.path)),
            )
            for m in self.marks
        ]
        return new

    def head_site(self, arc: str) -> Optional[tuple[str, str]]:
        """(kind, vertex) where the arc's head is attached, or None."""
        for xid, x in self.crossings.items():
            if x["over_in"] == arc or x["under_in"] == arc:
                return (_VX, xid)
        for bid, b in self.box_recs.items():
            if arc in b["strands"]:
                return (_VBOX, bid)
        return None

    def delete_crossing(self, xid: str, splice: bool = True) -> None:
        """Remove a crossing; with ``splice`` the four ends heal pairwise.

        Healing merges each incoming arc with its outgoing arc (the crossing
        becomes a plain joint which is then contracted).
        """
        x = self.crossings.pop(xid)
        if not splice:
            return
        for a in (x["over_in"], x["under_in"]):
            # a kink's loop arc is absorbed by the first merge
            if a in self.succ:
                self.merge_at_head(a)

    def merge_at_head(self, arc: str) -> None:
        """Contract the joint at ``arc``'s head, merging it with its successor.

        Only legal when the head is not attached to any vertex.  The successor
        arc is absorbed into ``arc`` (its references move back).
        """
        nxt = self.succ[arc]
        if nxt is None or nxt == arc:
            return
        if self.head_site(arc) is not None:
            raise DiagramError(f"cannot merge across attached head of {arc}")
        self._rename_arc(nxt, arc, keep_tail_of=arc)

    def _rename_arc(self, old: str, into: str, keep_tail_of: str) -> None:
        """Absorb arc ``old`` into ``into`` (old's head becomes into's head)."""
        self.succ[into] = self.succ[old]
        for x in self.crossings.values():
            if x["over_in"] == old:
                x["over_in"] = into
            if x["under_in"] == old:
                x["under_in"] = into
        for b in self.box_recs.values():
            sa, sb = b["strands"]
            b["strands"] = (into if sa == old else sa, into if sb == old else sb)
        if self.endpoints:
            for k, e in list(self.endpoints.items()):
                if e.arc == old:
                    self.endpoints[k] = End(into, e.end)
        new_marks = []
        for m in self.marks:
            if not m.path or old not in m.path_arcs():
                new_marks.append(m)
                continue
            mapped = [
                path_entry(into if pa == old else pa, pd) for pa, pd in m.path_steps()
            ]
            # collapse runs the merge created (same arc ridden the same way)
            collapsed = [p for i, p in enumerate(mapped) if i == 0 or p != mapped[i - 1]]
            new_marks.append(MarkedCurve(m.label, None, tuple(collapsed)))
        self.marks = new_marks
        for cid, sa in list(self.start_arc.items()):
            if sa == old:
                self.start_arc[cid] = into
        del self.succ[old]
        del self.arc_comp[old]

    def contract_joints(self) -> None:
        """Merge every arc with its successor across plain joints.

        Keeps single-arc free loops (an arc that succeeds itself) and never
        merges across vertices or free ends.
        """
        changed = True
        while changed:
            changed = False
            for arc in list(self.succ):
                if arc not in self.succ:
                    continue
                nxt = self.succ.get(arc)
                if nxt is None or nxt == arc:
                    continue
                if self.head_site(arc) is None:
                    self._rename_arc(nxt, arc, keep_tail_of=arc)
                    changed = True

    # -- box expansion -------------------------------------------------------

    def expand_box(self, bid: str) -> None:
        """Replace a box by explicit half-twist crossings.

        One full twist is two half-twist crossings.  In the parallel cell a
        right-handed twist yields positive crossings; in the antiparallel
        cell the same geometry yields negative crossings.  The over strand
        alternates between the two strands from cell to cell.
        """
        rec = self.box_recs.pop(bid)
        turns = rec["turns"]
        a_in, b_in = rec["strands"]
        anti = rec.get("anti", False)
        if turns == 0:
            return
        n = 2 * abs(turns)
        # chain pieces: A[0]=a_in, A[1..n-1] fresh, A[n]=old successor; the
        # crossings sit between consecutive pieces.
        A = [a_in]
        for _ in range(n - 1):
            A.append(self.split_arc(A[-1]))
        B = [b_in]
        for _ in range(n - 1):
            B.append(self.split_arc(B[-1]))
        sign = (1 if turns > 0 else -1) * (-1 if anti else 1)
        for k in range(1, n + 1):
            a_piece = A[k - 1]
            # in the antiparallel cell strand b passes the cells east to west
            b_piece = B[n - k] if anti else B[k - 1]
            first_over_b = turns > 0
            b_over = first_over_b == (k % 2 == 1)
            if b_over:
                self.add_crossing(over_in=b_piece, under_in=a_piece, sign=sign)
            else:
                self.add_crossing(over_in=a_piece, under_in=b_piece, sign=sign)

    # -- finalize ------------------------------------------------------------

    def finalize(self, validate: bool = True) -> Diagram:
        # trace strands
        comps: list[Component] = []
        seen: set[str] = set()
        free_tails = []
        if self.endpoints:
            listed = sorted({(e.arc, e.end) for e in self.endpoints.values()})
            free_tails = [a for (a, e) in listed if e == 0]
        order: list[tuple[str, list[str]]] = []

        def trace(start: str) -> list[str]:
            path = [start]
            seen.add(start)
            cur = start
            while True:
                nxt = self.succ.get(cur)
                if nxt is None:
                    break
                if nxt == start:
                    break
                if nxt in seen:
                    raise DiagramError(f"strand through {nxt} is not a simple cycle/path")
                path.append(nxt)
                seen.add(nxt)
                cur = nxt
            return path

        for a in free_tails:
            if a not in seen:
                order.append((self.arc_comp[a], trace(a)))
        # preferred starts first for stable output
        for cid in self.comp_order:
            sa = self.start_arc.get(cid)
            if sa is not None and sa in self.arc_comp and sa not in seen:
                order.append((self.arc_comp[sa], trace(sa)))
        for a in sorted(self.arc_comp):
            if a not in seen:
                order.append((self.arc_comp[a], trace(a)))

        by_comp: dict[str, list[list[str]]] = {}
        for cid, path in order:
            by_comp.setdefault(cid, []).append(path)
        for cid in self.comp_order:
            if cid in by_comp and len(by_comp[cid]) > 1:
                raise DiagramError(f"component {cid} traces to several strands")
        for cid in self.comp_order:
            if cid not in by_comp:
                continue
            meta = self.comp_meta[cid]
            comps.append(
                Component(
                    cid,
                    meta["kind"],
                    meta["framing"],
                    meta["orient"],
                    tuple(by_comp[cid][0]),
                )
            )
        live = {c.id for c in comps}
        crossings = [
            Crossing(xid, x["sign"], End(x["over_in"], 1), End(x["under_in"], 1))
            for xid, x in self.crossings.items()
        ]
        boxes = [
            TwistBox(bid, b["turns"], tuple(b["strands"]), b.get("anti", False))
            for bid, b in self.box_recs.items()
        ]
        thru = {
            (dc, fc): n
            for (dc, fc), n in self.thru.items()
            if dc in live and fc in live and n != 0
        }
        marks = []
        for m in self.marks:
            if m.comp is not None:
                if m.comp in live:
                    marks.append(m)
            else:
                path = tuple(
                    p for p in m.path if path_step(p)[0] in self.arc_comp
                )
                if path:
                    marks.append(MarkedCurve(m.label, None, path))
        return Diagram(
            comps,
            crossings,
            boxes,
            self.three_handles,
            self.four_handles,
            thru,
            marks,
            self.endpoints,
            validate=validate,
        )
