"""Core diagram model: wiring, planarity, boxes, writhe, linking."""

import pytest

from kirbycalc import Component, Crossing, Diagram, DiagramError, End, TwistBox
from kirbycalc.diagram import DiagramBuilder

from helpers import make_braid_closure, make_hopf, make_trefoil, make_unknot


class TestBasicStructure:
    def test_empty_diagram(self):
        d = Diagram([])
        assert d.euler_characteristic() == 1
        assert d.faces() == []

    def test_round_unknot(self):
        d = make_unknot()
        assert d.writhe("U") == 0
        assert d.genus_by_piece() == [0]
        assert len(d.faces()) == 2

    def test_duplicate_ids_rejected(self):
        c = Component("A", "plain", None, 1, ("a1",))
        c2 = Component("A", "plain", None, 1, ("a2",))
        with pytest.raises(DiagramError):
            Diagram([c, c2])

    def test_framing_decoration_rules(self):
        with pytest.raises(DiagramError):
            Component("A", "dotted", 3, 1, ("a1",))
        with pytest.raises(DiagramError):
            Component("A", "framed", None, 1, ("a1",))

    def test_immutability(self):
        d = make_unknot()
        with pytest.raises(AttributeError):
            d.three_handles = 5

    def test_counters(self):
        d = make_unknot().with_counters(three_handles=2, four_handles=1)
        assert d.euler_characteristic() == 1 - 0 + 0 - 2 + 1
        with pytest.raises(DiagramError):
            make_unknot().with_counters(four_handles=2)


class TestHopf:
    def test_linking_and_writhe(self):
        d = make_hopf()
        assert d.linking_number("A", "B") == 1
        assert d.writhe("A") == 0
        assert d.genus_by_piece() == [0]

    def test_negative_hopf(self):
        d = make_hopf(sign=-1)
        assert d.linking_number("A", "B") == -1

    def test_orientation_flip(self):
        d = make_hopf()
        assert d.reverse_orientation("A").linking_number("A", "B") == -1
        assert (
            d.reverse_orientation("A")
            .reverse_orientation("B")
            .linking_number("A", "B")
            == 1
        )
        # writhe is orientation independent
        assert d.reverse_orientation("A").writhe("A") == 0

    def test_symmetry(self):
        d = make_hopf()
        assert d.linking_number("A", "B") == d.linking_number("B", "A")


class TestTrefoil:
    def test_writhe(self):
        assert make_trefoil(True).writhe("K") == 3
        assert make_trefoil(False).writhe("K") == -3

    def test_planar(self):
        assert make_trefoil().genus_by_piece() == [0]

    def test_faces_euler(self):
        d = make_trefoil()
        # vertices: crossings plus plain joints (arc heads not at any crossing)
        n_arcs = len(d.components["K"].arcs)
        joints = n_arcs - 2 * len(d.crossings)
        V = len(d.crossings) + joints
        assert len(d.faces()) == 2 - V + n_arcs


class TestFigureEight:
    def test_writhe_zero(self):
        # sigma1 sigma2^-1 sigma1 sigma2^-1 closes to the 4-crossing knot
        d = make_braid_closure([1, -2, 1, -2], 3)
        assert d.writhe("K") == 0
        assert d.genus_by_piece() == [0]
        assert len(d.crossings) == 4


class TestBoxes:
    def test_parallel_box_linking(self):
        C1 = Component("C1", "framed", 0, 1, ("p1", "p2"))
        C2 = Component("C2", "framed", 0, 1, ("q1", "q2"))
        d = Diagram([C1, C2], [], [TwistBox("t", 1, ("p1", "q1"))])
        assert d.linking_number("C1", "C2") == 1
        assert d.expand_boxes().linking_number("C1", "C2") == 1
        assert d.total_crossings() == 2

    def test_parallel_box_negative(self):
        C1 = Component("C1", "framed", 0, 1, ("p1", "p2"))
        C2 = Component("C2", "framed", 0, 1, ("q1", "q2"))
        d = Diagram([C1, C2], [], [TwistBox("t", -2, ("p1", "q1"))])
        assert d.linking_number("C1", "C2") == -2
        dx = d.expand_boxes()
        assert len(dx.crossings) == 4
        assert dx.genus_by_piece() == [0]

    def test_anti_box_self(self):
        U = Component("U", "plain", None, 1, ("u1", "u2", "u3", "u4"))
        d = Diagram([U], [], [TwistBox("t", 1, ("u1", "u3"), anti=True)])
        assert d.writhe("U") == -2
        assert d.expand_boxes().genus_by_piece() == [0]

    def test_anti_box_left_twist(self):
        U = Component("U", "plain", None, 1, ("u1", "u2", "u3", "u4"))
        d = Diagram([U], [], [TwistBox("t", -1, ("u1", "u3"), anti=True)])
        assert d.writhe("U") == 2

    def test_parallel_wiring_of_antiparallel_band_rejected(self):
        # a U-turn band through a parallel-cell box is not planar
        U = Component("U", "plain", None, 1, ("u1", "u2", "u3", "u4"))
        with pytest.raises(DiagramError):
            Diagram([U], [], [TwistBox("t", 1, ("u1", "u3"))])

    def test_box_preserves_linking_on_expansion(self):
        # invariant: expansion never changes linking or writhe
        C1 = Component("C1", "framed", 2, 1, ("p1", "p2"))
        C2 = Component("C2", "framed", 0, -1, ("q1", "q2"))
        for turns in (-3, -1, 1, 2):
            d = Diagram([C1, C2], [], [TwistBox("t", turns, ("p1", "q1"))])
            dx = d.expand_boxes()
            assert d.linking_number("C1", "C2") == dx.linking_number("C1", "C2")
            assert d.writhe("C1") == dx.writhe("C1") == 0

    def test_degenerate_box_rejected(self):
        with pytest.raises(DiagramError):
            TwistBox("t", 1, ("a", "a"))


class TestBuilderSurgery:
    def test_split_arc_preserves_structure(self):
        d = make_hopf()
        bld = DiagramBuilder.from_diagram(d)
        bld.split_arc("a1")
        d2 = bld.finalize()
        assert len(d2.components["A"].arcs) == 3
        assert d2.linking_number("A", "B") == 1
        assert d2.genus_by_piece() == [0]

    def test_contract_joints(self):
        d = make_hopf()
        bld = DiagramBuilder.from_diagram(d)
        bld.split_arc("a1")
        bld.split_arc("b2")
        bld.contract_joints()
        d2 = bld.finalize()
        assert len(d2.components["A"].arcs) == 2
        assert len(d2.components["B"].arcs) == 2
        assert d2.linking_number("A", "B") == 1

    def test_delete_crossing_splices(self):
        d = make_hopf()
        bld = DiagramBuilder.from_diagram(d)
        bld.delete_crossing("x1", splice=False)
        bld.delete_crossing("x2", splice=False)
        bld.contract_joints()
        d2 = bld.finalize()
        assert len(d2.crossings) == 0
        assert d2.linking_number("A", "B") == 0

    def test_free_loop_single_arc(self):
        bld = DiagramBuilder()
        c = bld.add_component("plain", cid="U")
        a = bld.add_arc(c)
        bld.connect(a, a)
        d = bld.finalize()
        assert d.components["U"].arcs == (a,)
        assert d.genus_by_piece() == [0]


class TestTangles:
    def make_two_strand_tangle(self):
        S1 = Component("S1", "plain", None, 1, ("s1",))
        S2 = Component("S2", "plain", None, 1, ("s2",))
        endp = {
            "NW": End("s1", 0),
            "NE": End("s1", 1),
            "SW": End("s2", 0),
            "SE": End("s2", 1),
        }
        return Diagram([S1, S2], endpoints=endp)

    def test_trivial_tangle(self):
        d = self.make_two_strand_tangle()
        assert d.is_tangle()
        assert d.genus_by_piece() == [0, 0]

    def test_endpoint_mismatch_rejected(self):
        S1 = Component("S1", "plain", None, 1, ("s1",))
        S2 = Component("S2", "plain", None, 1, ("s2",))
        bad = {
            "NW": End("s1", 0),
            "NE": End("s1", 1),
            "SW": End("s2", 0),
            "SE": End("s1", 0),
        }
        with pytest.raises(DiagramError):
            Diagram([S1, S2], endpoints=bad)


class TestEffectiveSigns:
    def test_effective_sign_uses_orient(self):
        d = make_hopf()
        x = d.crossings["x1"]
        assert d.effective_sign(x) == 1
        d2 = d.reverse_orientation("B")
        assert d2.effective_sign(d2.crossings["x1"]) == -1
        d3 = d2.reverse_orientation("A")
        assert d3.effective_sign(d3.crossings["x1"]) == 1
