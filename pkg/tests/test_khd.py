"""KHD serialization: round-trips, determinism, error reporting."""

import pytest

from kirbycalc import (
    Component,
    Diagram,
    End,
    KHDParseError,
    MarkedCurve,
    TwistBox,
    emit_khd,
    parse_khd,
)

from helpers import make_hopf, make_trefoil, make_unknot


def roundtrip(d):
    text = emit_khd(d)
    d2 = parse_khd(text)
    assert d2 == d
    assert emit_khd(d2) == text
    return d2


class TestRoundTrip:
    def test_empty(self):
        d = Diagram([])
        assert emit_khd(d) == "khd v1\nhandles 3h=0 4h=0\n"
        roundtrip(d)

    def test_single_dotted(self):
        roundtrip(Diagram([Component("D", "dotted", None, 1, ("d1",))]))

    def test_hopf(self):
        roundtrip(make_hopf())

    def test_trefoil(self):
        roundtrip(make_trefoil())

    def test_counters_and_thru(self):
        D = Component("D", "dotted", None, 1, ("d1",))
        F = Component("F", "framed", -7, -1, ("f1",))
        d = Diagram([D, F], three_handles=2, four_handles=1, thru={("D", "F"): 3})
        d2 = roundtrip(d)
        assert d2.three_handles == 2 and d2.four_handles == 1
        assert d2.thru_count("D", "F") == 3

    def test_marks(self):
        d = make_hopf().with_marks(
            [MarkedCurve("gamma", comp="A"), MarkedCurve("c", path=("b1", "b2"))]
        )
        d2 = roundtrip(d)
        assert d2.mark("gamma").comp == "A"
        assert d2.mark("c").path == ("b1", "b2")

    def test_directed_mark_path(self):
        d = make_hopf().with_marks([MarkedCurve("c", path=("b1:+", "b2:-"))])
        # :+ normalizes away, :- is kept and survives the roundtrip
        assert d.mark("c").path == ("b1", "b2:-")
        assert d.mark("c").path_steps() == (("b1", 1), ("b2", -1))
        assert "path=b1,b2:-" in emit_khd(d)
        assert roundtrip(d).mark("c").path == ("b1", "b2:-")

    def test_boxes(self):
        C1 = Component("C1", "framed", 0, 1, ("p1", "p2"))
        C2 = Component("C2", "framed", 0, 1, ("q1", "q2"))
        roundtrip(Diagram([C1, C2], [], [TwistBox("t", -3, ("p1", "q1"))]))
        U = Component("U", "plain", None, 1, ("u1", "u2", "u3", "u4"))
        d = roundtrip(Diagram([U], [], [TwistBox("t", 2, ("u1", "u3"), anti=True)]))
        assert d.boxes["t"].anti

    def test_tangle_endpoints(self):
        S1 = Component("S1", "plain", None, 1, ("s1", "s3"))
        S2 = Component("S2", "plain", None, 1, ("s2",))
        endp = {
            "NW": End("s1", 0),
            "NE": End("s3", 1),
            "SW": End("s2", 0),
            "SE": End("s2", 1),
        }
        d = Diagram([S1, S2], endpoints=endp)
        text = emit_khd(d)
        # the single-arc strand needs explicit end suffixes
        assert "SW=s2.0" in text and "SE=s2.1" in text
        assert "NW=s1 " in text
        roundtrip(d)

    def test_orient_flag(self):
        d = make_hopf().reverse_orientation("B")
        text = emit_khd(d)
        assert "comp B framed -1 orient=-" in text
        assert roundtrip(d).components["B"].orient == -1


class TestParseErrors:
    def check(self, text, fragment, line=None):
        with pytest.raises(KHDParseError) as ei:
            parse_khd(text)
        assert fragment in str(ei.value)
        if line is not None:
            assert ei.value.line == line

    def test_missing_header(self):
        self.check("comp A dotted orient=+\n", "khd v1", 1)

    def test_unknown_record(self):
        self.check("khd v1\nblorb x\n", "unknown record", 2)

    def test_dangling_arc(self):
        self.check(
            "khd v1\ncomp A plain orient=+\narc a1 comp=A\n"
            "x x1 sign=+ over=zz.1 under=a1.1 rot=zz.1,a1.1,zz.0,a1.0\n",
            "unknown arc",
            4,
        )

    def test_bad_sign(self):
        self.check(
            "khd v1\ncomp A plain orient=+\narc a1 comp=A\n"
            "x x1 sign=3 over=a1.1 under=a1.1 rot=a1.1,a1.1,a1.0,a1.0\n",
            "bad sign",
            4,
        )

    def test_component_without_arcs(self):
        self.check("khd v1\ncomp A dotted orient=+\n", "no arcs")

    def test_duplicate_component(self):
        self.check(
            "khd v1\ncomp A dotted orient=+\ncomp A dotted orient=+\n",
            "duplicate component",
            3,
        )

    def test_wide_box_rejected(self):
        self.check(
            "khd v1\ncomp A plain orient=+\narc a1 comp=A\narc a2 comp=A\narc a3 comp=A\n"
            "box b turns=1 strands=a1,a2,a3\n",
            "exactly two strands",
            6,
        )

    def test_rot_inconsistent(self):
        good = emit_khd(make_hopf())
        bad = good.replace(
            "rot=a1.1,b1.1,a2.0,b2.0", "rot=a1.1,a2.0,b1.1,b2.0"
        )
        assert bad != good
        self.check(bad, "rot inconsistent")

    def test_nonplanar_rejected(self):
        # two circles meeting in exactly one crossing force genus 1
        bad = (
            "khd v1\n"
            "handles 3h=0 4h=0\n"
            "comp A framed 0\n"
            "arc a comp=A\n"
            "comp B framed 0\n"
            "arc b comp=B\n"
            "x x1 sign=+ over=a.1 under=b.1 rot=a.1,b.1,a.0,b.0\n"
        )
        with pytest.raises(KHDParseError, match="genus"):
            parse_khd(bad)

    def test_comments_and_blanks_ok(self):
        text = "# header comment\nkhd v1\n\nhandles 3h=0 4h=0  # trailing\n"
        d = parse_khd(text)
        assert len(d.components) == 0
