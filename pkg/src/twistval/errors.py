"""Exception hierarchy for twistval.

Computation errors are loud and specific: a failed rounding, a route
disagreement or a theorem violation should never be silently absorbed,
since the whole point of the package is that such events are bugs (or
discoveries) and must surface with a full witness.
"""


class TwistvalError(Exception):
    """Base class for all package errors."""


# -- curve construction ------------------------------------------------------

class SingularModel(TwistvalError):
    """Weierstrass model has discriminant zero."""


class NotSquarefree(TwistvalError):
    """Twisting integer must be squarefree."""


class NoRationalTwoTorsion(TwistvalError):
    """Curve has no rational point of order 2."""


class FullTwoTorsion(TwistvalError):
    """Curve has full rational 2-torsion; the 2-isogeny kernel is ambiguous."""


class ZeroDiscriminant(TwistvalError):
    """Field classification needs a nonzero integer."""


# -- finite field layer ------------------------------------------------------

class BadReduction(TwistvalError):
    """Prime divides the discriminant; good-reduction routine refused."""


class GoodReduction(TwistvalError):
    """Prime does not divide the discriminant; bad-reduction routine refused."""


class WrongTorsionShape(TwistvalError):
    """Rational 2-torsion does not match the requested check branch."""


class TwistNotCoprime(TwistvalError):
    """Twist integer shares a factor with the conductor."""


class NotTwistPrime(TwistvalError):
    """Prime does not divide the twist (or divides 2C)."""


# -- analytic layer ----------------------------------------------------------

class PrecisionExhausted(TwistvalError):
    """Requested accuracy cannot be met within the mantissa budget."""


class CoefficientTableTooShort(TwistvalError):
    """Series tail bound needs more coefficients than supplied."""


class AmbiguousRootNumber(TwistvalError):
    """Neither sign makes the functional-equation probe consistent."""


class RouteDisagreement(TwistvalError):
    """Two independent computation routes disagree beyond tolerance."""


# -- symbol sums and rationalisation ----------------------------------------

class NotLatticePoint(TwistvalError):
    """Complex value does not round to half-integral lattice coordinates."""


class IntegralityViolation(TwistvalError):
    """An invariant that must be an integer failed its residual check."""


class NoRationalInWindow(TwistvalError):
    """No rational with bounded denominator within the error window."""


class Ord2Disagreement(TwistvalError):
    """Twisted-period route and symbol-sum route give different valuations."""


# -- verification ------------------------------------------------------------

class TheoremViolation(TwistvalError):
    """A sweep falsified a proven statement: treated as an artifact bug."""


# -- table ingestion ---------------------------------------------------------

class ParseError(TwistvalError):
    """Malformed curve-table row."""

    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ValidationError(TwistvalError):
    """Curve-table row parsed but failed semantic validation."""
