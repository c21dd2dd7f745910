"""Elementary number theory helpers shared across the package.

Everything here is exact integer arithmetic.  Factorisation and prime
iteration are delegated to sympy; quadratic symbols and modular square
roots are written out because they sit in hot loops and their exact
conventions (Kronecker extension at 2 and at negative arguments) matter
for the character computations downstream.
"""

import math

from sympy import factorint, isprime, primerange

try:
    from gmpy2 import invert as _gmpy_invert

    def inverse_mod(a, m):
        return int(_gmpy_invert(a, m))
except ImportError:  # pragma: no cover - gmpy2 is a soft dependency
    def inverse_mod(a, m):
        return pow(a, -1, m)


def xgcd(a, b):
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b)."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def ord_p(n, p):
    """Exponent of the prime p in n (n != 0)."""
    if n == 0:
        raise ValueError("ord_p(0) undefined here")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def jacobi(a, n):
    """Jacobi symbol (a/n) for odd positive n."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("jacobi: n must be odd and positive")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(a, n):
    """Kronecker symbol (a/n), defined for all integers n."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    e = 0
    while n % 2 == 0:
        n //= 2
        e += 1
    if e:
        if a % 2 == 0:
            return 0
        if e % 2 == 1 and a % 8 in (3, 5):
            result = -result
    return result * jacobi(a, n)


def legendre(a, p):
    """Legendre symbol via Euler's criterion (p an odd prime)."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def sqrt_mod(a, p):
    """A square root of a mod p (p an odd prime, a a QR); Tonelli-Shanks."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while legendre(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        c = b * b % p
        m, t, r = i, t * c % p, r * b % p
    return r


TRIAL_BOUND = 10 ** 6


def squarefree_part(n):
    """Squarefree part of n != 0 (same sign as n).

    Trial division up to 10^6 strips all small primes; the cofactor is
    then either 1, a perfect square, or a product of distinct primes
    > 10^6 (true for every discriminant-like integer at desk scale).
    """
    if n == 0:
        raise ValueError("squarefree part of 0 undefined")
    sign = -1 if n < 0 else 1
    n = abs(n)
    core = 1
    for p in range(2, TRIAL_BOUND + 1):
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            if e % 2:
                core *= p
    if n > 1:
        r = math.isqrt(n)
        if r * r == n:
            pass  # square cofactor contributes nothing
        else:
            core *= n
    return sign * core


def is_squarefree(n):
    if n == 0:
        return False
    n = abs(n)
    for p, e in factorint(n).items():
        if e > 1:
            return False
    return True


def odd_prime_factors(n):
    """Sorted odd prime factors of n != 0."""
    return sorted(p for p in factorint(abs(n)) if p != 2)


def prime_support(n):
    """Sorted prime factors of n != 0."""
    return sorted(factorint(abs(n)))


def divisors_from_primes(primes):
    """All products of subsets of a list of distinct primes, sorted."""
    divs = [1]
    for p in primes:
        divs += [d * p for d in divs]
    return sorted(divs)


def primes_up_to(bound):
    return list(primerange(2, bound + 1))


def is_prime(n):
    return isprime(n)
