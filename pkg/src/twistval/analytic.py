"""High-precision analytic layer: periods, L-values, period integrals.

Periods come from the arithmetic-geometric mean on the root
configuration of z^3 + b2 z^2 + 8 b4 z + 16 b6 (the 2-division cubic in
z = 4x), whose roots are 4x over the 2-torsion x-coordinates; with
respect to dz/sqrt(h) the real period is 2*pi/agm(...).  Central values
are exponential series with the functional-equation split

    L(1) = sum a_n chi(n)/n [exp(-2 pi n t / X) + w exp(-2 pi n / (t X))]

at scale X = sqrt(level); evaluating at two split points t gives a free
self-test, and scanning the sign w gives the root-number probe.

Two summation engines share every formula: an mpmath engine for the
default 10^-30 budget, and a float64/numpy engine used when a caller
asks for a budget no tighter than ~1e-13 (bulk integrality sweeps over
thousands of large twists, where mpfs would be hopeless).
"""

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum

import mpmath as mp
import numpy as np

from .arith import kronecker, jacobi, prime_support, xgcd
from .curve_core import minimal_model, quadratic_twist, real_components
from .errors import (
    AmbiguousRootNumber,
    CoefficientTableTooShort,
    PrecisionExhausted,
    RouteDisagreement,
    TwistNotCoprime,
)
from .finite_field import a_n_array, build_ap_table

HARD_COEFFICIENT_CAP = 3 * 10 ** 7
NUMPY_ENGINE_MIN_EPS = 1e-13


@dataclass(frozen=True)
class Precision:
    """Mantissa budget and absolute error target for the analytic layer."""

    bits: int = 192
    target_abs_err: float = 1e-30

    def __post_init__(self):
        if self.target_abs_err < 2.0 ** (-self.bits + 16):
            raise PrecisionExhausted(
                f"target {self.target_abs_err} below the guard-digit floor "
                f"for {self.bits} mantissa bits"
            )

    @contextmanager
    def ctx(self):
        with mp.workprec(self.bits):
            yield

    def bumped(self, extra_bits=64):
        return Precision(self.bits + extra_bits,
                         self.target_abs_err * 2.0 ** (-extra_bits // 2))


def series_length(X, eps):
    """Smallest n with (X/2pi)(n + X) exp(-2 pi n/X) < eps (|a_n| <= n bound)."""
    X = float(X)
    c = X / (2 * math.pi)
    n = max(32.0, 8 * c)
    for _ in range(6):
        n = c * (math.log(c * (n + X)) - math.log(eps))
    n_max = int(math.ceil(n)) + 16
    if n_max > HARD_COEFFICIENT_CAP:
        raise CoefficientTableTooShort(
            f"series at scale X={X:.3g}, eps={eps:.3g} needs {n_max} coefficients"
        )
    return n_max


class LatticeShape(Enum):
    RECTANGULAR = "rectangular"  # disc > 0
    RHOMBIC = "rhombic"          # disc < 0


@dataclass
class PeriodData:
    omega_plus: object   # mpf, least positive real period
    omega_minus: object  # mpf, i*omega_minus least purely imaginary period
    components: int
    shape: LatticeShape
    manin_constant: int = 1

    @property
    def c_plus(self):
        # exact: multiplication by 1 or 2 must not round to ambient precision
        return mp.fmul(self.components, self.omega_plus, exact=True)

    @property
    def c_minus(self):
        return mp.fmul(self.components, self.omega_minus, exact=True)

    @property
    def cf_plus(self):
        if self.manin_constant == 1:
            return self.c_plus
        return self.c_plus / self.manin_constant

    @property
    def cf_minus(self):
        if self.manin_constant == 1:
            return self.c_minus
        return self.c_minus / self.manin_constant

    def c_signed(self, m):
        """c_plus for m = 1 mod 4, c_minus for m = 3 mod 4 (m odd positive)."""
        return self.c_plus if m % 4 == 1 else self.c_minus


_period_cache = {}


def periods(model, prec=Precision()):
    """Real and imaginary half-periods of the Neron differential via AGM."""
    key = (model.a_invariants, prec.bits)
    if key in _period_cache:
        return _period_cache[key]
    with prec.ctx():
        coeffs = [mp.mpf(1), mp.mpf(model.b2), mp.mpf(8 * model.b4), mp.mpf(16 * model.b6)]
        roots = mp.polyroots(coeffs, maxsteps=200, extraprec=prec.bits)
        tiny = mp.mpf(2) ** (-prec.bits // 2)
        reals = sorted((r.real for r in roots if abs(r.imag) < tiny * (1 + abs(r))),
                       reverse=True)
        two_pi = 2 * mp.pi
        if model.disc > 0:
            if len(reals) != 3:
                raise PrecisionExhausted("root classification failed (disc > 0)")
            e1, e2, e3 = reals
            om_p = two_pi / mp.agm(mp.sqrt(e1 - e3), mp.sqrt(e1 - e2))
            om_m = two_pi / mp.agm(mp.sqrt(e1 - e3), mp.sqrt(e2 - e3))
            data = PeriodData(om_p, om_m, 2, LatticeShape.RECTANGULAR)
        else:
            if len(reals) != 1:
                raise PrecisionExhausted("root classification failed (disc < 0)")
            e1 = reals[0]
            e2 = next(r for r in roots if r.imag > tiny)
            e3 = mp.conj(e2)
            om_p_c = two_pi / mp.agm(mp.sqrt(e1 - e3), mp.sqrt(e1 - e2))
            om2 = two_pi / mp.agm(mp.sqrt(e3 - e1), mp.sqrt(e3 - e2))
            if abs(om_p_c.imag) > tiny * abs(om_p_c):
                raise PrecisionExhausted("conjugate AGM lost symmetry")
            om_p = om_p_c.real
            # om2 generates the lattice together with om_p: [om_p, (om_p + i om_m)/2]
            if abs(abs(om2.real) / om_p - mp.mpf(1) / 2) > mp.mpf(1e-20):
                raise PrecisionExhausted("rhombic basis misaligned")
            om_m = 2 * abs(om2.imag)
            data = PeriodData(om_p, om_m, 1, LatticeShape.RHOMBIC)
    _period_cache[key] = data
    return data


# -- coefficient-backed series context ----------------------------------------

class LSeriesContext:
    """A curve plus everything its L-series evaluations need.

    Holds the exact coefficient array (grown on demand, disk-cached via
    the a_p cache) and the probed root number.  Immutable from the
    caller's point of view; growth is append-only.
    """

    def __init__(self, model, conductor, prec=Precision(), curve_key=None,
                 cache_dir=None, jobs=1):
        self.model = minimal_model(model)
        self.conductor = int(conductor)
        self.prec = prec
        self.curve_key = curve_key or ".".join(str(a) for a in self.model.a_invariants)
        self.cache_dir = cache_dir
        self.jobs = jobs
        self._an = None
        self._w = None
        assert prime_support(self.model.disc) == prime_support(self.conductor), \
            "conductor support must match the minimal discriminant"

    @classmethod
    def for_curve(cls, record, prec=Precision(), cache_dir=None, jobs=1):
        return cls(record.model, record.conductor, prec,
                   curve_key=record.label, cache_dir=cache_dir, jobs=jobs)

    def coefficients(self, n_max):
        """int64 array a[0..n_max] (a[0] = 0), extending the cache as needed."""
        if self._an is None or len(self._an) <= n_max:
            grown = max(int(n_max * 1.1) + 64, 1024)
            table = build_ap_table(self.model, grown, curve_key=self.curve_key,
                                   cache_dir=self.cache_dir, jobs=self.jobs)
            self._an = a_n_array(self.model, table, grown)
        return self._an

    @property
    def scale(self):
        """X = sqrt(conductor): decay scale of the central-value series."""
        return math.sqrt(self.conductor)

    @property
    def root_number(self):
        if self._w is None:
            self._w = _probe_root_number(self)
        return self._w


def _partial_sum_mpmath(bn_list, level, t_num, t_den, n_max, bits):
    """sum_{n<=n_max} b_n / n * exp(-2 pi n t / sqrt(level)) with mpfs.

    level and t = t_num/t_den are exact, so the geometric ratio carries
    full working precision.
    """
    with mp.workprec(bits):
        r = mp.exp(-2 * mp.pi * t_num / (t_den * mp.sqrt(level)))
        acc = mp.mpf(0)
        pw = mp.mpf(1)
        for n in range(1, n_max + 1):
            pw *= r
            b = bn_list[n]
            if b:
                acc += mp.mpf(b) * pw / n
        return acc


def _partial_sum_numpy(bn, level, t, n_max):
    n = np.arange(1, n_max + 1, dtype=np.float64)
    w = np.exp((-2 * math.pi * t / math.sqrt(level)) * n) / n
    return float(np.dot(bn[1:n_max + 1].astype(np.float64), w))


def _series_eval(ctx, chi, level, t_pair, eps):
    """One exponential partial sum at split point t, engine chosen by eps."""
    t_num, t_den = t_pair
    t = t_num / t_den
    n_max = series_length(math.sqrt(level) / t, eps)  # decay scale is X/t
    an = ctx.coefficients(n_max)
    if chi is not None:
        bn = an[: n_max + 1] * chi[: n_max + 1]
    else:
        bn = an[: n_max + 1]
    if eps >= NUMPY_ENGINE_MIN_EPS:
        return _partial_sum_numpy(bn, level, t, n_max), "numpy"
    return _partial_sum_mpmath(bn.tolist(), level, t_num, t_den, n_max, ctx.prec.bits), "mpmath"


def _probe_root_number(ctx, tol=1e-10):
    """Sign of the functional equation by consistency at two split points."""
    level = ctx.conductor
    eps = min(float(ctx.prec.target_abs_err), 1e-20)
    sums = {}
    for t_pair in ((11, 10), (10, 11), (13, 10), (10, 13)):
        sums[t_pair], _ = _series_eval(ctx, None, level, t_pair, eps)
    scale = max(1.0, float(abs(sums[(11, 10)])), float(abs(sums[(10, 11)])))
    verdicts = {}
    for w in (1, -1):
        d = (sums[(11, 10)] + w * sums[(10, 11)]) - (sums[(13, 10)] + w * sums[(10, 13)])
        verdicts[w] = abs(d) < tol * scale
    if verdicts[1] == verdicts[-1]:
        raise AmbiguousRootNumber(
            f"functional-equation probe inconclusive for {ctx.curve_key}: {verdicts}"
        )
    return 1 if verdicts[1] else -1


def root_number(ctx):
    return ctx.root_number


def l_value(ctx, eps=None):
    """L(E, 1) to absolute error eps (default: the context's budget)."""
    eps = float(ctx.prec.target_abs_err) if eps is None else float(eps)
    w = ctx.root_number
    if w == -1:
        return mp.mpf(0) if eps < NUMPY_ENGINE_MIN_EPS else 0.0
    level = ctx.conductor
    s1, engine = _series_eval(ctx, None, level, (1, 1), eps / 2)
    a, _ = _series_eval(ctx, None, level, (6, 5), eps / 2)
    b, _ = _series_eval(ctx, None, level, (5, 6), eps / 2)
    with ctx.prec.ctx():
        value = 2 * s1
        check = a + w * b
        tol = 300 * eps if engine == "mpmath" else max(300 * eps, 1e-13 * (1 + abs(value)))
        if abs(value - check) > tol:
            raise PrecisionExhausted(
                f"split-point self-test failed for {ctx.curve_key}: "
                f"|{value} - {check}| > {tol}"
            )
    return value


# -- quadratic characters and twisted values -----------------------------------

def quadratic_character_values(m_signed, n_max):
    """chi_M(n) for n = 0..n_max as int8 (M squarefree, M = 1 mod 4).

    For fundamental M = 1 mod 4 the Kronecker symbol (M/n) agrees with
    the Jacobi symbol (n/|M|) for positive n, which vectorises into a
    product of Legendre tables.
    """
    m = abs(m_signed)
    vals = np.ones(n_max + 1, dtype=np.int8)
    n_mod = np.arange(n_max + 1, dtype=np.int64)
    for q in prime_support(m):
        tab = -np.ones(q, dtype=np.int8)
        tab[0] = 0
        sq = np.arange(1, q, dtype=np.int64)
        tab[(sq * sq) % q] = 1
        vals *= tab[n_mod % q]
    return vals


def twisted_root_number(ctx, m_signed):
    """w(E tensor chi_M) = chi_M(-C) * w(E) for gcd(M, 2C) = 1."""
    return kronecker(m_signed, -ctx.conductor) * ctx.root_number


def twisted_l_value(ctx, m_signed, eps=None, check_route=False, route_tol=1e-20):
    """L(E^(M), 1) by the character-twisted series at level C M^2.

    With check_route=True the value is recomputed from scratch on the
    twisted curve itself (its own minimal model, point counts and
    functional-equation probe) and the two must agree to route_tol
    relative; this is the independent second route.
    """
    eps = float(ctx.prec.target_abs_err) if eps is None else float(eps)
    m = abs(m_signed)
    if math.gcd(m, ctx.conductor) != 1:
        raise TwistNotCoprime(f"gcd({m_signed}, {ctx.conductor}) != 1")
    level = ctx.conductor * m * m
    w = twisted_root_number(ctx, m_signed)
    if w == -1:
        value = mp.mpf(0)
    else:
        n_probe = series_length(math.sqrt(level) * 1.2, eps / 2)
        chi = quadratic_character_values(m_signed, n_probe + 8)
        s1, engine = _series_eval(ctx, chi, level, (1, 1), eps / 2)
        a, _ = _series_eval(ctx, chi, level, (6, 5), eps / 2)
        b, _ = _series_eval(ctx, chi, level, (5, 6), eps / 2)
        with ctx.prec.ctx():
            value = 2 * s1
            tol = 300 * eps if engine == "mpmath" else max(300 * eps, 1e-13 * (1 + abs(value)))
            if abs(value - (a + w * b)) > tol:
                raise PrecisionExhausted(f"twist split self-test failed (M={m_signed})")
    if check_route:
        other = twisted_context(ctx, m_signed)
        direct = l_value(other, eps=eps)
        with ctx.prec.ctx():
            scale = max(abs(value), abs(direct), mp.mpf(1) if eps < 1e-13 else 1.0)
            if abs(value - direct) > route_tol * scale + 10 * eps:
                raise RouteDisagreement(
                    f"twisted series {value} vs twisted curve {direct} (M={m_signed})"
                )
    return value


_twist_ctx_cache = {}


def twisted_context(ctx, m_signed):
    """Fresh LSeriesContext for the minimal model of the twisted curve."""
    key = (ctx.curve_key, m_signed, ctx.prec.bits)
    if key not in _twist_ctx_cache:
        model = quadratic_twist(ctx.model, m_signed)
        cond = ctx.conductor * m_signed * m_signed
        _twist_ctx_cache[key] = LSeriesContext(
            model, cond, ctx.prec, curve_key=f"{ctx.curve_key}.tw{m_signed}",
            cache_dir=ctx.cache_dir, jobs=ctx.jobs,
        )
    return _twist_ctx_cache[key]


# -- period integrals over vertical-free geodesics ------------------------------

def period_integral(ctx, k, m):
    """<{0, k/m}, f> = F(gamma z0) - F(z0) for gamma in Gamma_0(C) with
    gamma(0) = k/m, evaluated at the symmetric base point Im z = 1/(cC).

    Requires gcd(k, m) = 1, gcd(m, C) = 1, 0 < k < m.  F is the
    exponential antiderivative sum a_n/n e^{2 pi i n z}.
    """
    C = ctx.conductor
    assert 0 < k < m and math.gcd(k, m) == 1 and math.gcd(m, C) == 1
    g, x0, y0 = xgcd(m, k * C)
    assert g == 1, "no gamma exists (impossible when gcd(m, C) = 1)"
    c = (-y0) % m
    if c == 0:
        c = m
    a = (1 + k * C * c) // m
    assert a * m - k * C * c == 1
    eps = float(ctx.prec.target_abs_err)
    n_max = series_length(c * C, eps)
    an = ctx.coefficients(n_max).tolist()
    with ctx.prec.ctx():
        cC = c * C
        z0 = mp.mpc(-m, 1) / cC
        gz0 = (a * z0 + k) / mp.mpc(0, 1)
        two_pi_i = 2 * mp.pi * mp.mpc(0, 1)
        r0 = mp.exp(two_pi_i * z0)
        r1 = mp.exp(two_pi_i * gz0)
        acc0 = mp.mpc(0)
        acc1 = mp.mpc(0)
        pw0 = mp.mpc(1)
        pw1 = mp.mpc(1)
        for n in range(1, n_max + 1):
            pw0 *= r0
            pw1 *= r1
            coeff = an[n]
            if coeff:
                acc0 += mp.mpf(coeff) * pw0 / n
                acc1 += mp.mpf(coeff) * pw1 / n
        return acc1 - acc0


def gauss_sum(d, prec=Precision()):
    """g(chi_d) = sum_k (k/d) e^{2 pi i k/d} for odd squarefree d > 1."""
    with prec.ctx():
        root = mp.exp(2 * mp.pi * mp.mpc(0, 1) / d)
        acc = mp.mpc(0)
        pw = mp.mpc(1)
        for k in range(1, d):
            pw *= root
            j = jacobi(k, d)
            if j:
                acc += j * pw
        return acc


def gauss_sum_exact(d, prec=Precision()):
    """Classical closed form: sqrt(d) if d = 1 mod 4 else i sqrt(d)."""
    with prec.ctx():
        if d % 4 == 1:
            return mp.mpc(mp.sqrt(d), 0)
        return mp.mpc(0, mp.sqrt(d))
