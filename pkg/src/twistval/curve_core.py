"""Integral Weierstrass models and the exact-arithmetic curve operations.

Models are immutable; every derived invariant (b- and c-invariants,
discriminant, j) is computed once at construction.  Minimal models use
Laska-Kraus-Connell reduction: shrink (c4, c6) by the largest admissible
u, then rebuild the reduced equation from the invariant pair.  All
operations here are exact over Z / Q; nothing floats.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from enum import Enum
import math

from sympy import divisors

from .arith import is_squarefree, ord_p, prime_support, squarefree_part
from .errors import (
    FullTwoTorsion,
    NoRationalTwoTorsion,
    NotSquarefree,
    SingularModel,
    ValidationError,
    ZeroDiscriminant,
)

_BIG = 10 ** 9  # effectively-infinite valuation for a zero invariant


@dataclass(frozen=True)
class WeierstrassModel:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    b2: int = field(compare=False, default=0)
    b4: int = field(compare=False, default=0)
    b6: int = field(compare=False, default=0)
    b8: int = field(compare=False, default=0)
    c4: int = field(compare=False, default=0)
    c6: int = field(compare=False, default=0)
    disc: int = field(compare=False, default=0)

    @classmethod
    def from_a_invariants(cls, a1, a2, a3, a4, a6):
        a1, a2, a3, a4, a6 = (int(a1), int(a2), int(a3), int(a4), int(a6))
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        c4 = b2 * b2 - 24 * b4
        c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
        disc = -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        if disc == 0:
            raise SingularModel(f"discriminant 0 for a-invariants {(a1, a2, a3, a4, a6)}")
        assert 4 * b8 == b2 * b6 - b4 * b4
        assert c4 ** 3 - c6 ** 2 == 1728 * disc
        return cls(a1, a2, a3, a4, a6, b2, b4, b6, b8, c4, c6, disc)

    @property
    def a_invariants(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def j_invariant(self):
        return Fraction(self.c4 ** 3, self.disc)

    def two_division_cubic(self):
        """Monic integer cubic whose roots are 4x over the 2-torsion x's.

        From u^2 = 4x^3 + b2 x^2 + 2 b4 x + b6 with z = 4x:
        z^3 + b2 z^2 + 8 b4 z + 16 b6.
        """
        return (self.b2, 8 * self.b4, 16 * self.b6)

    def __repr__(self):
        return f"WeierstrassModel{self.a_invariants}"


def compute_invariants(a_invariants):
    """Build a model from raw a-coefficients, rejecting singular input."""
    return WeierstrassModel.from_a_invariants(*a_invariants)


def _kraus_ok(C4, C6):
    """Kraus conditions: (C4, C6) arise from some integral model."""
    if (C4 ** 3 - C6 ** 2) % 1728 != 0:
        return False
    if C6 % 9 == 0 and C6 % 27 != 0:  # ord_3(C6) == 2 is forbidden
        return False
    if C6 % 4 == 3:
        return True
    return C4 % 16 == 0 and C6 % 32 in (0, 8)


def _model_from_c4c6(C4, C6):
    """Reduced integral model with invariants (C4, C6); Kraus must hold."""
    b2 = (-C6) % 12
    if b2 > 6:
        b2 -= 12
    num = b2 * b2 - C4
    assert num % 24 == 0
    b4 = num // 24
    num = -b2 ** 3 + 36 * b2 * b4 - C6
    assert num % 216 == 0
    b6 = num // 216
    a1 = b2 % 2
    a3 = b6 % 2
    a2 = (b2 - a1) // 4
    a4 = (b4 - a1 * a3) // 2
    a6 = (b6 - a3) // 4
    model = WeierstrassModel.from_a_invariants(a1, a2, a3, a4, a6)
    assert (model.c4, model.c6) == (C4, C6)
    return model


def minimal_model(model):
    """Global minimal model of the curve, in reduced form (idempotent)."""
    c4, c6, disc = model.c4, model.c6, model.disc
    u = 1
    for p in prime_support(disc):
        e = min(
            ord_p(c4, p) // 4 if c4 else _BIG,
            ord_p(c6, p) // 6 if c6 else _BIG,
            ord_p(disc, p) // 12,
        )
        u *= p ** e
    while True:
        C4, C6 = c4 // u ** 4, c6 // u ** 6
        if _kraus_ok(C4, C6):
            break
        if u % 3 == 0 and (C6 % 9 == 0 and C6 % 27 != 0):
            u //= 3
            continue
        assert u % 2 == 0, "Kraus failure must be at 2 or 3"
        u //= 2
    return _model_from_c4c6(C4, C6)


def quadratic_twist(model, m):
    """Minimal model of the quadratic twist by the squarefree integer m."""
    m = int(m)
    if m == 0 or not is_squarefree(m):
        raise NotSquarefree(f"twist by {m}")
    c4t = model.c4 * m * m
    c6t = model.c6 * m ** 3
    naive = WeierstrassModel.from_a_invariants(0, 0, 0, -27 * c4t, -54 * c6t)
    return minimal_model(naive)


def _integer_roots_monic_cubic(p2, p1, p0):
    """Integer roots of z^3 + p2 z^2 + p1 z + p0."""
    roots = set()
    if p0 == 0:
        roots.add(0)
        # remaining quadratic z^2 + p2 z + p1
        if p1 == 0:
            roots.add(-p2)
        else:
            d = p2 * p2 - 4 * p1
            if d >= 0:
                r = math.isqrt(d)
                if r * r == d:
                    for s in (-p2 + r, -p2 - r):
                        if s % 2 == 0:
                            roots.add(s // 2)
        return sorted(roots)
    for d in divisors(abs(p0)):
        for z in (d, -d):
            if ((z + p2) * z + p1) * z + p0 == 0:
                roots.add(z)
    return sorted(roots)


def rational_two_torsion_order(model):
    """|E(Q)[2]| in {1, 2, 4}: 1 + number of rational 2-division roots."""
    b2, p1, p0 = model.two_division_cubic()
    return 1 + len(_integer_roots_monic_cubic(b2, p1, p0))


def two_isogenous_curve(model):
    """Quotient by the rational 2-torsion point (requires E(Q)[2] = Z/2).

    On the translated form y^2 = x(x^2 + ax + b) the quotient curve is
    y^2 = x(x^2 - 2ax + (a^2 - 4b)), returned as a minimal model.
    """
    roots = _integer_roots_monic_cubic(0, -27 * model.c4, -54 * model.c6)
    if not roots:
        raise NoRationalTwoTorsion(f"{model} has trivial rational 2-torsion")
    if len(roots) > 1:
        raise FullTwoTorsion(f"{model} has full rational 2-torsion; kernel ambiguous")
    z0 = roots[0]
    a = 3 * z0
    b = 3 * z0 * z0 - 27 * model.c4
    quotient = WeierstrassModel.from_a_invariants(0, -2 * a, 0, a * a - 4 * b, 0)
    return minimal_model(quotient)


class FieldClass(Enum):
    RATIONALS = "Q"
    GAUSSIAN = "Q(i)"
    OTHER = "Q(sqrt(d))"


@dataclass(frozen=True)
class FieldClassification:
    kind: FieldClass
    squarefree_part: int

    def __str__(self):
        if self.kind is FieldClass.OTHER:
            return f"Q(sqrt({self.squarefree_part}))"
        return self.kind.value


def field_class(d):
    """Classify Q(sqrt(d)) as Q, Q(i) or a genuine quadratic field."""
    if d == 0:
        raise ZeroDiscriminant("cannot classify Q(sqrt(0))")
    d0 = squarefree_part(d)
    if d0 == 1:
        return FieldClassification(FieldClass.RATIONALS, 1)
    if d0 == -1:
        return FieldClassification(FieldClass.GAUSSIAN, -1)
    return FieldClassification(FieldClass.OTHER, d0)


def real_components(model):
    """Number of connected components of E(R): 2 iff disc > 0."""
    return 2 if model.disc > 0 else 1


@dataclass(frozen=True)
class CurveRecord:
    label: str
    model: WeierstrassModel
    conductor: int
    optimal: bool
    manin_constant_assumed_odd: bool = True
    source_note: str = ""

    def validate(self):
        if self.conductor <= 0:
            raise ValidationError(f"{self.label}: conductor must be positive")
        if minimal_model(self.model).a_invariants != self.model.a_invariants:
            raise ValidationError(f"{self.label}: stored model is not reduced-minimal")
        if prime_support(self.model.disc) != prime_support(self.conductor):
            raise ValidationError(
                f"{self.label}: discriminant support {prime_support(self.model.disc)} "
                f"!= conductor support {prime_support(self.conductor)}"
            )
        return self

    def __str__(self):
        return f"{self.label} {self.model.a_invariants} C={self.conductor}"


@dataclass(frozen=True)
class TwistDescriptor:
    m_signed: int
    sign: int
    primes: tuple
    m: int
    m_plus: int
    m_minus: int

    @classmethod
    def from_m(cls, m_signed):
        m_signed = int(m_signed)
        if m_signed % 4 != 1 or m_signed == 1:
            raise NotSquarefree(f"twist {m_signed} must be squarefree, != 1, and = 1 mod 4")
        if not is_squarefree(m_signed):
            raise NotSquarefree(f"twist {m_signed} is not squarefree")
        m = abs(m_signed)
        primes = tuple(prime_support(m))
        m_plus = 1
        m_minus = 1
        for q in primes:
            if q % 4 == 1:
                m_plus *= q
            else:
                m_minus *= q
        sign = 1 if m_signed > 0 else -1
        assert sign * m == m_signed and m_plus * m_minus == m
        return cls(m_signed, sign, primes, m, m_plus, m_minus)

    @property
    def r(self):
        return len(self.primes)

    @property
    def r_plus(self):
        return len([q for q in self.primes if q % 4 == 1])

    @property
    def r_minus(self):
        return len([q for q in self.primes if q % 4 == 3])


def admissible_twists(conductor, bound):
    """All twist descriptors with |M| <= bound and gcd(M, conductor) = 1.

    Enumeration order: |M| ascending (the sign is forced by M = 1 mod 4),
    which keeps sweep reports reproducible.
    """
    out = []
    for n in range(3, bound + 1, 2):
        m_signed = n if n % 4 == 1 else -n
        if math.gcd(n, conductor) != 1 or not is_squarefree(n):
            continue
        out.append(TwistDescriptor.from_m(m_signed))
    return out
