"""Rational recognition of normalized L-values and their 2-adic valuations.

A normalized central value L(E^(M), 1)/c_inf(E^(M)) is provably
rational; we recover it with continued-fraction convergents under a
denominator bound (Fraction.limit_denominator is exactly that
algorithm), demand that the recovered rational sit inside the rigorous
error window, and only then read off ord_2.

Every nonzero value is measured twice: once against the twisted curve's
own periods, once through the symbol-sum normalization
sqrt(|M|) L(E^(M),1) / c_f^{+/-}(E), which must be an integer.  The two
valuations have to agree; a mismatch raises rather than averages.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .analytic import periods, twisted_context, twisted_l_value
from .errors import NoRationalInWindow, NotSquarefree, Ord2Disagreement
from .finite_field import count_points
from .arith import primes_up_to

DEFAULT_ZERO_THRESHOLD = 1e-15
DEN_BOUND_HEADROOM = 10 ** 4


def _fraction_from_mpf(x):
    sign, man, exp, _ = mp.mpf(x)._mpf_
    num = -man if sign else man
    if exp >= 0:
        return Fraction(num * (1 << exp), 1)
    return Fraction(num, 1 << -exp)


def reconstruct_rational(x, den_bound, abs_err):
    """The unique rational p/q, q <= den_bound, within abs_err of x.

    Uniqueness needs abs_err < 1/(2 den_bound^2); the caller must
    provide that window or the answer would be meaningless.
    """
    den_bound = int(den_bound)
    # float windows are dyadic, so Fraction() is exact; never approximate here
    abs_err_f = _fraction_from_mpf(abs_err) if isinstance(abs_err, mp.mpf) else Fraction(abs_err)
    if not abs_err_f < Fraction(1, 2 * den_bound * den_bound):
        raise ValueError(f"window {abs_err} too wide for denominator bound {den_bound}")
    exact = _fraction_from_mpf(x) if isinstance(x, mp.mpf) else Fraction(x)
    cand = exact.limit_denominator(den_bound)
    if abs(cand - exact) > abs_err_f:
        raise NoRationalInWindow(
            f"no rational with denominator <= {den_bound} within {abs_err} of {x}"
        )
    return cand


def ord2(r):
    """2-adic valuation of a rational; ord2(0) is +infinity."""
    if isinstance(r, int):
        r = Fraction(r)
    if r == 0:
        return math.inf
    num, den = abs(r.numerator), r.denominator
    e = 0
    while num % 2 == 0:
        num //= 2
        e += 1
    while den % 2 == 0:
        den //= 2
        e -= 1
    return e


def torsion_order_bound(model):
    """A multiple of |E(Q)_tor|: gcd of |E(F_p)| over several good odd p."""
    bound = 0
    used = 0
    for p in primes_up_to(80):
        if p == 2 or model.disc % p == 0:
            continue
        bound = math.gcd(bound, count_points(model, p))
        used += 1
        if used >= 8 and bound <= 16:
            break
    return max(bound, 1)


ROUTE_TWIST_PERIOD = "DIRECT_TWIST_PERIOD"
ROUTE_SYMBOL_SUM = "SYMBOL_SUM"


@dataclass
class AlgebraicLValue:
    curve_key: str
    m_signed: int
    numeric: object          # mpf: L(E^(M), 1)
    rational: Fraction       # L(E^(M),1) / c_inf(E^(M))
    ord2: object             # int or math.inf
    symbol_integer: int      # sqrt(|M|) L / c_f^{+/-}(E), exact integer
    period_ratio_log2: int   # sqrt(|M|) c_inf(E^(M)) / c^{+/-}(E) = 2^this
    route: str
    is_zero: bool


def algebraic_l_value(ctx, m_signed, zero_threshold=DEFAULT_ZERO_THRESHOLD,
                      den_bound_headroom=DEN_BOUND_HEADROOM, _escalated=False):
    """Exact algebraic part of L(E^(M), 1) with its 2-adic valuation.

    Route one normalizes by the twisted curve's own c_inf; route two by
    the symbol-sum normalization on the base curve.  Their ord_2 must
    agree (the sqrt(|M|)-scaled period ratio is logged as a power of 2).
    """
    if m_signed % 4 != 1 or m_signed == 1:
        raise NotSquarefree(f"twist {m_signed} must be squarefree != 1, = 1 mod 4")
    prec = ctx.prec
    lnum = twisted_l_value(ctx, m_signed)
    tw = twisted_context(ctx, m_signed)
    pd_tw = periods(tw.model, prec)
    pd = periods(ctx.model, prec)
    m = abs(m_signed)
    ratio_tol = max(1e-20, 2.0 ** (-prec.bits + 12))
    with prec.ctx():
        c_inf_tw = pd_tw.c_plus
        c_signed = pd.cf_plus if m % 4 == 1 else pd.cf_minus
        x = mp.mpf(lnum) / c_inf_tw
        y = mp.sqrt(m) * mp.mpf(lnum) / c_signed
        ratio = mp.sqrt(m) * c_inf_tw / c_signed
        k = int(mp.nint(mp.log(ratio, 2)))
        if abs(ratio / mp.mpf(2) ** k - 1) > mp.mpf(ratio_tol):
            raise Ord2Disagreement(
                f"period ratio {ratio} for M={m_signed} is not a power of 2"
            )
    tor = torsion_order_bound(tw.model)
    den_bound = den_bound_headroom * tor * tor
    window = max(float(prec.target_abs_err) * 2e3, 1e-25)
    # low-precision contexts cannot certify the full headroom; shrink the
    # bound to keep the uniqueness window valid (escalation covers the rest)
    den_cap = int(math.isqrt(int(1 / (4 * window))))
    den_bound = min(den_bound, max(den_cap, 4 * tor * tor))
    try:
        rational = reconstruct_rational(x, den_bound, window)
        symbol_int_frac = reconstruct_rational(y, 1 << 12, window)
    except NoRationalInWindow:
        if _escalated:
            raise
        bumped = _escalated_context(ctx)
        return algebraic_l_value(bumped, m_signed, zero_threshold,
                                 den_bound_headroom, _escalated=True)
    if symbol_int_frac.denominator != 1:
        raise Ord2Disagreement(
            f"symbol normalization {symbol_int_frac} not an integer for M={m_signed}"
        )
    symbol_int = symbol_int_frac.numerator
    is_zero = bool(abs(lnum) < zero_threshold * float(c_inf_tw)) and rational == 0
    if (rational == 0) != (symbol_int == 0):
        raise Ord2Disagreement(f"zero status differs between routes for M={m_signed}")
    v1 = ord2(rational)
    v2 = ord2(symbol_int)
    if v1 != v2:
        raise Ord2Disagreement(
            f"M={m_signed}: twisted-period ord2 {v1} != symbol-sum ord2 {v2} "
            f"(period ratio 2^{k})"
        )
    return AlgebraicLValue(
        ctx.curve_key, m_signed, lnum, rational, v1, symbol_int, k,
        ROUTE_TWIST_PERIOD, is_zero,
    )


def _escalated_context(ctx):
    """One-shot precision escalation for a failed reconstruction."""
    from .analytic import LSeriesContext

    return LSeriesContext(ctx.model, ctx.conductor, ctx.prec.bumped(),
                          curve_key=ctx.curve_key, cache_dir=ctx.cache_dir,
                          jobs=ctx.jobs)
