"""The matched prime set, twist Tamagawa 2-valuations, density verdicts.

A good odd prime q is "matched" for E when ord_2 |E(F_q)| equals
ord_2 |E(Q)[2]|, subject to the congruence branch: every odd residue
class qualifies when the minimal discriminant is negative, while for
positive discriminant only q = 1 mod 4 is admitted (the excluded branch
genuinely fails: see the counterexample reproductions in verify).

For curves with a single rational 2-torsion point the matched condition
at q is equivalent to E(F_q)[4] = Z/2, which ties these sieves to the
field classifications of the discriminants of E and its 2-isogenous
curve: that equivalence is what the density verdicts encode.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .arith import prime_support
from .curve_core import (
    FieldClass,
    field_class,
    rational_two_torsion_order,
    two_isogenous_curve,
)
from .errors import NotTwistPrime, TwistNotCoprime
from .finite_field import build_ap_table, count_points, ord2_int, two_torsion_count_mod

REASON_OK = "OK"
REASON_BAD_PRIME = "BAD_PRIME"
REASON_CONGRUENCE = "CONGRUENCE_FAIL"
REASON_TWO_PART = "TWO_PART_MISMATCH"


@dataclass(frozen=True)
class SMembership:
    q: int
    in_set: bool
    reason: str


def _target_two_part(model):
    return {1: 0, 2: 1, 4: 2}[rational_two_torsion_order(model)]


def classify_prime(model, conductor, q, n_q=None):
    """Membership of the odd prime q in the matched set for this curve."""
    if q == 2 or conductor % q == 0:
        return SMembership(q, False, REASON_BAD_PRIME)
    if model.disc > 0 and q % 4 == 3:
        return SMembership(q, False, REASON_CONGRUENCE)
    if n_q is None:
        n_q = count_points(model, q)
    if ord2_int(n_q) != _target_two_part(model):
        return SMembership(q, False, REASON_TWO_PART)
    return SMembership(q, True, REASON_OK)


@dataclass
class DensityReport:
    bound: int
    matched_count: int
    prime_count: int
    fraction: Fraction
    corollary: str
    predicted_positive: bool
    four_torsion_subfamily_count: int
    subfamily_empty_expected: bool
    field_e: str
    field_isogenous: str


@dataclass
class SieveResult:
    primes: list
    report: DensityReport
    memberships: list


def sieve_matched_primes(model, conductor, bound, cache_dir=None, curve_key=None,
                         jobs=1, require_1mod4=False):
    """Classify every odd prime <= bound and attach the density verdict.

    require_1mod4 additionally restricts a trivial-2-torsion sieve to the
    q = 1 mod 4 sub-branch (the branch used for twist sign balancing).
    """
    table = build_ap_table(model, bound, curve_key=curve_key, cache_dir=cache_dir,
                           jobs=jobs)
    torsion = rational_two_torsion_order(model)
    target = _target_two_part(model)
    matched = []
    memberships = []
    subfamily = 0
    total = 0
    for q, a_q in table.values.items():
        if q == 2:
            continue
        total += 1
        if conductor % q == 0:
            memberships.append(SMembership(q, False, REASON_BAD_PRIME))
            continue
        n_q = q + 1 - a_q
        two_part_ok = ord2_int(n_q) == target
        if two_part_ok:
            subfamily += 1
        mem = classify_prime(model, conductor, q, n_q=n_q)
        if mem.in_set and require_1mod4 and q % 4 != 1:
            mem = SMembership(q, False, REASON_CONGRUENCE)
        memberships.append(mem)
        if mem.in_set:
            matched.append(q)

    if torsion == 1:
        corollary = "two-torsion-free"
        predicted_positive = True
        f_e = str(field_class(model.disc))
        f_iso = "n/a"
        empty_expected = False
    elif torsion == 2:
        iso = two_isogenous_curve(model)
        fc_e = field_class(model.disc)
        fc_i = field_class(iso.disc)
        f_e, f_iso = str(fc_e), str(fc_i)
        if model.disc < 0:
            corollary = "one-two-torsion-negative-disc"
            predicted_positive = fc_i.kind is not FieldClass.RATIONALS
        else:
            corollary = "one-two-torsion-positive-disc"
            predicted_positive = fc_i.kind is FieldClass.OTHER
        empty_expected = fc_i.kind is FieldClass.RATIONALS
    else:
        corollary = "full-two-torsion (outside scope)"
        predicted_positive = True
        f_e = str(field_class(model.disc))
        f_iso = "ambiguous"
        empty_expected = False

    report = DensityReport(
        bound=bound,
        matched_count=len(matched),
        prime_count=total + 1,  # pi(bound) includes 2
        fraction=Fraction(len(matched), max(total + 1, 1)),
        corollary=corollary,
        predicted_positive=predicted_positive,
        four_torsion_subfamily_count=subfamily if torsion == 2 else -1,
        subfamily_empty_expected=empty_expected,
        field_e=f_e,
        field_isogenous=f_iso,
    )
    return SieveResult(matched, report, memberships)


def even_tamagawa_count(model, conductor, m_signed):
    """t_E(M): number of primes q | M with even N_q.

    At a twist prime q the Tamagawa factor of the twisted curve has
    even order exactly when |E(F_q)| is even, so this sum is the
    exponent in every lower bound downstream.  Additive over coprime
    factorizations by construction.
    """
    m = abs(m_signed)
    if math.gcd(m, conductor) != 1:
        raise TwistNotCoprime(f"gcd({m_signed}, {conductor}) != 1")
    count = 0
    for q in prime_support(m):
        if count_points(model, q) % 2 == 0:
            count += 1
    return count


def tamagawa_ord2_at_twist_prime(model, conductor, m_signed, q):
    """ord_2 of the twisted Tamagawa factor at q | M: 0, 1 or 2.

    Equals ord_2 |E(F_q)[2]|, i.e. the number of roots of the 2-division
    cubic mod q mapped through {0 roots: 0, 1 root: 1, 3 roots: 2}.
    """
    if abs(m_signed) % q != 0 or q == 2 or conductor % q == 0:
        raise NotTwistPrime(f"q={q} is not an odd twist prime of M={m_signed}")
    return ord2_int(two_torsion_count_mod(model, q))
