"""Small hand-built diagrams shared across test modules."""

from __future__ import annotations

from kirbycalc import Component, Crossing, Diagram, End, TwistBox
from kirbycalc.diagram import DiagramBuilder


def make_hopf(f1=1, f2=-1, sign=1, kinds=("framed", "framed")):
    fa = f1 if kinds[0] == "framed" else None
    fb = f2 if kinds[1] == "framed" else None
    A = Component("A", kinds[0], fa, 1, ("a1", "a2"))
    B = Component("B", kinds[1], fb, 1, ("b1", "b2"))
    x1 = Crossing("x1", sign, End("a1", 1), End("b1", 1))
    x2 = Crossing("x2", sign, End("b2", 1), End("a2", 1))
    return Diagram([A, B], [x1, x2])


def make_braid_closure(word, n_strands, comp_kind="plain", framing=None, cid="K"):
    """Closure of a braid word; word entries are +/-(i+1) for generator i.

    Positive generator: the strand in lane i crosses over lane i+1.
    Returns the finalized diagram (single or multiple components are traced
    automatically; all arcs are assigned to one component, so the word must
    close to a knot).
    """
    bld = DiagramBuilder()
    K = bld.add_component(comp_kind, framing, 1, cid)
    starts = [bld.add_arc(K) for _ in range(n_strands)]
    cur = list(starts)
    for g in word:
        i = abs(g) - 1
        nl = bld.add_arc(K)
        nr = bld.add_arc(K)
        if g > 0:
            bld.add_crossing(over_in=cur[i], under_in=cur[i + 1], sign=1)
        else:
            bld.add_crossing(over_in=cur[i + 1], under_in=cur[i], sign=-1)
        # over strand exits into the far lane in both cases
        bld.connect(cur[i], nr)
        bld.connect(cur[i + 1], nl)
        cur[i], cur[i + 1] = nl, nr
    for a, b in zip(cur, starts):
        bld.connect(a, b)
    bld.start_arc[K] = starts[0]
    return bld.finalize()


def make_trefoil(positive=True):
    w = [1, 1, 1] if positive else [-1, -1, -1]
    return make_braid_closure(w, 2)


def make_braid_closure_link(word, n_strands, kind="plain", framing=None, prefix="L"):
    """Braid closure allowed to split into several components."""
    import itertools

    counter = itertools.count(1)
    arcs: list[str] = []
    succ: dict[str, str] = {}

    def new_arc() -> str:
        a = f"s{next(counter)}"
        arcs.append(a)
        return a

    starts = [new_arc() for _ in range(n_strands)]
    cur = list(starts)
    xs = []
    for k, g in enumerate(word, start=1):
        i = abs(g) - 1
        nl, nr = new_arc(), new_arc()
        if g > 0:
            xs.append(Crossing(f"x{k}", 1, End(cur[i], 1), End(cur[i + 1], 1)))
        else:
            xs.append(Crossing(f"x{k}", -1, End(cur[i + 1], 1), End(cur[i], 1)))
        succ[cur[i]] = nr
        succ[cur[i + 1]] = nl
        cur[i], cur[i + 1] = nl, nr
    for a, b in zip(cur, starts):
        succ[a] = b
    comps = []
    seen: set[str] = set()
    n = 0
    for a0 in arcs:
        if a0 in seen:
            continue
        cyc = [a0]
        seen.add(a0)
        a = succ[a0]
        while a != a0:
            cyc.append(a)
            seen.add(a)
            a = succ[a]
        n += 1
        comps.append(Component(f"{prefix}{n}", kind, framing, 1, tuple(cyc)))
    return Diagram(comps, xs)


def make_braid_tangle(word, n_strands, kind="plain", framing=None, prefix="S"):
    """Open braid tangle: strands run top to bottom, ends left free."""
    import itertools

    counter = itertools.count(1)
    arcs: list[str] = []
    succ: dict[str, str] = {}

    def new_arc() -> str:
        a = f"s{next(counter)}"
        arcs.append(a)
        return a

    starts = [new_arc() for _ in range(n_strands)]
    cur = list(starts)
    xs = []
    for k, g in enumerate(word, start=1):
        i = abs(g) - 1
        nl, nr = new_arc(), new_arc()
        if g > 0:
            xs.append(Crossing(f"x{k}", 1, End(cur[i], 1), End(cur[i + 1], 1)))
        else:
            xs.append(Crossing(f"x{k}", -1, End(cur[i + 1], 1), End(cur[i], 1)))
        succ[cur[i]] = nr
        succ[cur[i + 1]] = nl
        cur[i], cur[i + 1] = nl, nr
    comps = []
    for n, a0 in enumerate(starts, start=1):
        path = [a0]
        while path[-1] in succ:
            path.append(succ[path[-1]])
        comps.append(Component(f"{prefix}{n}", kind, framing, 1, tuple(path)))
    return Diagram(comps, xs)


def make_unknot(cid="U", kind="plain", framing=None, arcs=("u1",)):
    return Diagram([Component(cid, kind, framing, 1, tuple(arcs))])
