"""kirbycalc: an exact engine for handle diagrams of smooth 4-manifolds.

The package models framed-link diagrams decorated with dotted circles, twist
boxes and 3-/4-handle counters, applies the diagrammatic moves of handle
calculus (Reidemeister moves, handle slides, blow-ups/downs, cancellations
and several composite moves), certifies every step homologically with exact
integer arithmetic, and replays the full simplification of the double-node
surgery manifolds down to standard pieces.
"""

from .diagram import (
    Component,
    Crossing,
    Diagram,
    DiagramBuilder,
    DiagramError,
    End,
    MarkedCurve,
    TwistBox,
)
from .khd import KHDParseError, emit_khd, parse_khd

__version__ = "0.1.0"

__all__ = [
    "Component",
    "Crossing",
    "Diagram",
    "DiagramBuilder",
    "DiagramError",
    "End",
    "MarkedCurve",
    "TwistBox",
    "KHDParseError",
    "emit_khd",
    "parse_khd",
    "__version__",
]
