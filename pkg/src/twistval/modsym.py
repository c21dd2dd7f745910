"""Character-weighted symbol sums, lattice coordinates, integrality invariants.

For an odd squarefree m coprime to the conductor, the two bracket
families are

    principal:  sum over units k mod m of <{0, k/m}, f>
    quadratic:  the same sum weighted by the quadratic character mod d | m

The principal bracket at level m is an exact integer multiple of
L(E, 1): the product-of-local-factors identity expresses
N_{q_1}...N_{q_r} L(E,1) through principal brackets of divisors, and
solving it recursively gives the integer multiplier outright.  The
quadratic bracket reduces to its base level d by the Hecke propagation
factor (a_q - 2 chi_d(q)) per prime q | m/d, and the base value is
d * L(E, chi_d, 1) / g(chi_d) with g the quadratic Gauss sum.

Every identity has a second, direct route: summing period integrals
<{0, k/m}> term by term.  The direct route is quadratic in m and is
gated by a term budget; within the budget both routes must agree.

All mpmath arithmetic runs inside the context's precision; values that
escape are full-precision mpfs/mpcs.
"""

import math
from dataclasses import dataclass

import mpmath as mp

from .arith import jacobi
from .analytic import (
    l_value,
    period_integral,
    periods,
    twisted_l_value,
)
from .curve_core import TwistDescriptor
from .errors import IntegralityViolation, NotLatticePoint, RouteDisagreement
from .finite_field import count_points

ROUNDING_REJECT_TOL = 1e-6
DEFAULT_STAR_BUDGET = 5_000_000


@dataclass(frozen=True)
class SymbolSum:
    m: int
    character_modulus: int  # 1 for the principal character
    value: object           # mpc / mpf
    route: str

    @property
    def is_principal(self):
        return self.character_modulus == 1


_multiplier_cache = {}


def principal_multiplier(ctx, m):
    """Exact integer c with <m>_principal = c * L(E, 1).

    Solves N_{q_1}..N_{q_r} L = (-1)^r sum_{1 < d | m} prod_{q | m/d}(1-q) <d>
    recursively; the base case is <q> = -N_q L.
    """
    desc = TwistDescriptor.from_m(m if m % 4 == 1 else -m)
    primes = desc.primes
    n_q = {q: count_points(ctx.model, q) for q in primes}

    def mult(d_primes):
        d = math.prod(d_primes)
        key = (ctx.curve_key, d)
        if key in _multiplier_cache:
            return _multiplier_cache[key]
        if len(d_primes) == 1:
            c = -n_q[d_primes[0]]
        else:
            total = math.prod(n_q[q] for q in d_primes)
            sign = (-1) ** len(d_primes)
            acc = 0
            for sub in _proper_subsets(d_primes):
                cofactor = math.prod(1 - q for q in d_primes if q not in sub)
                acc += cofactor * mult(sub)
            c = sign * total - acc
        _multiplier_cache[key] = c
        return c

    return mult(primes)


def _proper_subsets(primes):
    out = []
    n = len(primes)
    for mask in range(1, (1 << n) - 1):
        out.append(tuple(primes[i] for i in range(n) if mask >> i & 1))
    return out


def principal_bracket(ctx, m, check_direct=False, direct_tol=1e-20):
    """<m> for the principal character at level m, as an exact multiple of L."""
    c = principal_multiplier(ctx, m)
    with ctx.prec.ctx():
        value = c * l_value(ctx)
        route = "recursion"
        if check_direct:
            direct = direct_symbol_sum(ctx, m, 1)
            scale = max(abs(value), abs(direct), periods(ctx.model, ctx.prec).cf_plus)
            if abs(value - direct) > direct_tol * scale:
                raise RouteDisagreement(
                    f"principal bracket m={m}: recursion {value} vs direct {direct}"
                )
            route = "recursion+direct"
    return SymbolSum(m, 1, value, route)


_base_bracket_cache = {}


def _base_quadratic_bracket(ctx, d, eps):
    """<d>_{chi_d} = sqrt(d) L(E, chi_d, 1), times i when d = 3 mod 4.

    This is d L / g with the conjugate Gauss-sum orientation
    g = sqrt(d) resp. -i sqrt(d); the orientation is pinned by the
    direct definition-route sum (quadratic_bracket's check_direct), not
    chosen: the value is real for d = 1 mod 4 and purely imaginary with
    the sign of L(E, chi_d, 1) for d = 3 mod 4.
    """
    tier = None if eps is None else round(math.log10(eps))
    key = (ctx.curve_key, d, tier)
    if key in _base_bracket_cache:
        return _base_bracket_cache[key]
    m_signed = d if d % 4 == 1 else -d
    lval = twisted_l_value(ctx, m_signed, eps=eps)
    with ctx.prec.ctx():
        scaled = mp.sqrt(d) * mp.mpf(float(lval) if not isinstance(lval, mp.mpf) else lval)
        value = mp.mpc(scaled, 0) if d % 4 == 1 else mp.mpc(0, scaled)
    _base_bracket_cache[key] = value
    return value


def hecke_propagation_factor(ctx, m, d):
    """prod over primes q | m/d of (a_q - 2 chi_d(q)); exact integer."""
    factor = 1
    for q in TwistDescriptor.from_m(m if m % 4 == 1 else -m).primes:
        if d % q:
            a_q = q + 1 - count_points(ctx.model, q)
            factor *= a_q - 2 * jacobi(q % d, d)
    return factor


def quadratic_bracket(ctx, m, d, eps=None, check_direct=False, direct_tol=1e-18):
    """<m>_{chi_d} for 1 < d | m via base value and Hecke propagation."""
    assert d > 1 and m % d == 0
    base = _base_quadratic_bracket(ctx, d, eps)
    factor = hecke_propagation_factor(ctx, m, d)
    with ctx.prec.ctx():
        value = factor * base
        if check_direct:
            direct = direct_symbol_sum(ctx, m, d)
            scale = max(abs(value), abs(direct), periods(ctx.model, ctx.prec).cf_plus)
            if abs(value - direct) > direct_tol * scale:
                raise RouteDisagreement(
                    f"<{m}>_chi_{d}: propagated {value} vs direct {direct}"
                )
    return SymbolSum(m, d, value, "propagation")


def direct_symbol_sum(ctx, m, d):
    """Term-by-term character sum of period integrals (slow, independent)."""
    with ctx.prec.ctx():
        acc = mp.mpc(0)
        for k in range(1, m):
            if math.gcd(k, m) != 1:
                continue
            chi = 1 if d == 1 else jacobi(k % d, d)
            if chi == 0:
                continue
            acc += chi * period_integral(ctx, k, m)
        return acc


# -- lattice coordinates --------------------------------------------------------

@dataclass(frozen=True)
class LatticeCoords:
    s: int
    t: int
    residual_s: float
    residual_t: float


def lattice_coordinates(pd, value, reject_tol=ROUNDING_REJECT_TOL):
    """Integers (s, t) with value = (s c_f + i t c_f^-)/2, residual-checked.

    The rejection threshold sits far above working precision: anything
    in between signals a computation bug rather than rounding noise, and
    raises instead of rounding.
    """
    with mp.workprec(256):
        s_real = 2 * mp.re(value) / pd.cf_plus
        t_real = 2 * mp.im(value) / pd.cf_minus
        s, t = int(mp.nint(s_real)), int(mp.nint(t_real))
        res_s, res_t = float(abs(s_real - s)), float(abs(t_real - t))
    if res_s > reject_tol or res_t > reject_tol:
        raise NotLatticePoint(
            f"value {value} rounds to ({s},{t}) with residuals ({res_s:.2e},{res_t:.2e})"
        )
    return LatticeCoords(s, t, res_s, res_t)


def star_residues(m, primes):
    """Units k mod m with chi_q(k) = +1 for every prime q | m."""
    out = []
    for k in range(1, m):
        if math.gcd(k, m) != 1:
            continue
        if all(jacobi(k % q, q) == 1 for q in primes):
            out.append(k)
    return out


# -- the integrality invariants --------------------------------------------------

@dataclass
class IntegralityReport:
    m: int
    r: int
    psi: int
    psi_prime: int
    residual: float
    residual_prime: float
    divisibility_ok: bool
    parity_equal: bool
    route: str
    star_psi: int = None
    star_psi_prime: int = None

    @property
    def ok(self):
        return self.divisibility_ok


def _divisor_split(desc):
    """Divisors d of m grouped by parity of r(d^-), as (d, primes) pairs."""
    plus, minus = [], []
    n = len(desc.primes)
    for mask in range(1 << n):
        d_primes = tuple(desc.primes[i] for i in range(n) if mask >> i & 1)
        d = math.prod(d_primes)
        r_minus = sum(1 for q in d_primes if q % 4 == 3)
        (plus if r_minus % 2 == 0 else minus).append((d, d_primes))
    return plus, minus


def integrality_report(ctx, m, psi_tol=ROUNDING_REJECT_TOL,
                       star_budget=DEFAULT_STAR_BUDGET, fast=False):
    """Verify both integrality sums at m and return the integer invariants.

    The identity route assembles sum_{d | m} <m>_{chi_d}, split by the
    parity of r(d^-), divides by c_f (resp. i c_f^-), and demands an
    integer divisible by 2^{r(m)-1}.  When the direct star-sum route
    fits the term budget it is computed as well and must agree exactly
    after rounding.

    fast=True lets the base twisted values run on the float engine with
    a per-divisor error budget sized so the assembled invariant is still
    good to well below psi_tol; used by the bulk sweeps.
    """
    desc = TwistDescriptor.from_m(m if m % 4 == 1 else -m)
    r = desc.r
    pd = periods(ctx.model, ctx.prec)
    plus, minus = _divisor_split(desc)

    def bracket_value(d):
        if d == 1:
            with ctx.prec.ctx():
                return mp.mpc(principal_multiplier(ctx, m) * l_value(ctx), 0)
        eps = None
        if fast:
            eps = max(2e-10 * float(pd.cf_plus) / math.sqrt(d), 1e-12)
        return quadratic_bracket(ctx, m, d, eps=eps).value

    with ctx.prec.ctx():
        sum_plus = mp.mpc(0)
        for d, _ in plus:
            sum_plus += bracket_value(d)
        sum_minus = mp.mpc(0)
        for d, _ in minus:
            sum_minus += bracket_value(d)

        # sum_plus must be real, sum_minus purely imaginary
        s_real = sum_plus.real / pd.cf_plus
        s_leak = abs(sum_plus.imag) / pd.cf_plus
        t_real = sum_minus.imag / pd.cf_minus  # division by i c_f^-
        t_leak = abs(sum_minus.real) / pd.cf_minus
        s_int = int(mp.nint(s_real))
        t_int = int(mp.nint(t_real))
        residual = float(max(abs(s_real - s_int), s_leak))
        residual_prime = float(max(abs(t_real - t_int), t_leak))
    if max(residual, residual_prime) > psi_tol:
        raise IntegralityViolation(
            f"m={m}: normalized sums {float(s_real)}, {float(t_real)} not integral "
            f"(residuals {residual:.2e}, {residual_prime:.2e})"
        )
    pow2 = 1 << (r - 1)
    divisibility_ok = s_int % pow2 == 0 and t_int % pow2 == 0
    psi = s_int // pow2
    psi_prime = t_int // pow2
    report = IntegralityReport(
        m, r, psi, psi_prime, residual, residual_prime,
        divisibility_ok, (psi - psi_prime) % 2 == 0, "identity",
    )

    unit_count = math.prod(q - 1 for q in desc.primes)
    est_terms = (unit_count >> r) * m * ctx.conductor * 7
    if est_terms <= star_budget:
        star_psi = 0
        star_psi_prime = 0
        for k in star_residues(m, desc.primes):
            coords = lattice_coordinates(pd, period_integral(ctx, k, m))
            star_psi += coords.s
            star_psi_prime += coords.t
        report.star_psi = star_psi
        report.star_psi_prime = star_psi_prime
        report.route = "identity+star"
        if (star_psi, star_psi_prime) != (psi, psi_prime):
            raise RouteDisagreement(
                f"m={m}: star route ({star_psi},{star_psi_prime}) "
                f"vs identity route ({psi},{psi_prime})"
            )
    return report
