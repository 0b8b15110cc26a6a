"""Special functions for the secrecy analytics.

Everything downstream reduces to four ingredients: the integer-order gamma
family, the exponential integral E1, the log-moment integral
F(n+1, x) = int_x^inf ln(u) u^n e^(-u) du, and log-domain combinatorics.
All functions here are pure and operate on plain floats; a signed log-domain
value type (`SignedLog`) is provided for summations whose terms overflow or
cancel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.5772156649015328606

_LOG_EPS = math.log(2.0 ** -52)


class DomainError(ValueError):
    """Argument outside the supported domain."""


@dataclass(frozen=True)
class EvalPrecision:
    """Evaluation-precision request for the closed-form analytics.

    ``extended`` switches the evaluators to a software wide-float mode
    (mpmath, >= 50 decimal digits, i.e. more than twice the float64
    significand) for sums that cancel catastrophically at large spatial DoF.
    """

    mode: str = "standard-float"
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.mode not in ("standard-float", "extended"):
            raise DomainError(f"unknown precision mode {self.mode!r}")
        if not (0.0 < self.rel_tol <= 1e-3):
            raise DomainError("rel_tol must lie in (0, 1e-3]")


STANDARD = EvalPrecision()
EXTENDED = EvalPrecision(mode="extended", rel_tol=1e-20)


def _logsumexp(logs):
    m = max(logs)
    if m == -math.inf:
        return -math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in logs))


# ---------------------------------------------------------------------------
# exponential integral
# ---------------------------------------------------------------------------

def _e1_power_series(x, euler, eps, log_fn=math.log):
    """E1 for small arguments: -gamma - ln x + sum (-1)^(k-1) x^k / (k k!).

    Generic over the scalar type (float or mpmath.mpf); `eps` is the relative
    truncation target.
    """
    total = -euler - log_fn(x)
    term = x * 0 + 1
    k = 0
    while True:
        k += 1
        term = term * x / k
        contrib = term / k
        if k % 2:
            total += contrib
        else:
            total -= contrib
        if abs(contrib) < eps * abs(total) or k > 10_000:
            return total


def _e1_cf_scaled(x, eps):
    """e^x E1(x) via the continued fraction (modified Lentz), x >= 1.

    The scaled value is formed directly, never through e^x.
    """
    tiny = 1e-300
    b = x + 1
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 100_000):
        a = -i * i
        b = b + 2
        d = a * d + b
        if abs(d) < tiny:
            d = d * 0 + tiny
        c = b + a / c
        if abs(c) < tiny:
            c = c * 0 + tiny
        d = 1 / d
        delta = d * c
        h = h * delta
        if abs(delta - 1) < eps:
            return h
    raise ArithmeticError("continued fraction for E1 failed to converge")


def exp_e1(x: float) -> float:
    """Exponential integral E1(x) = int_x^inf e^(-u)/u du, x > 0.

    Power series below 1, continued fraction above; underflows to 0 for
    x beyond ~745 (use scaled_e1 there).
    """
    if x <= 0.0:
        raise DomainError("E1 requires x > 0")
    if x < 1.0:
        return _e1_power_series(float(x), EULER_GAMMA, 2e-17)
    return math.exp(-x) * _e1_cf_scaled(float(x), 2e-17)


def scaled_e1(x: float) -> float:
    """e^x E1(x) without forming e^x, accurate for x in [1e-12, 1e6]."""
    if x <= 0.0:
        raise DomainError("scaled E1 requires x > 0")
    if x < 1.0:
        return math.exp(x) * _e1_power_series(float(x), EULER_GAMMA, 2e-17)
    return _e1_cf_scaled(float(x), 2e-17)


def exp_e1_log(x: float) -> float:
    """ln E1(x), finite for the whole supported range."""
    return -x + math.log(scaled_e1(x))


# ---------------------------------------------------------------------------
# gamma family (integer order)
# ---------------------------------------------------------------------------

def gamma_int(n: int):
    """Gamma(n) = (n-1)! for positive integer n.

    Returns (value, log_value); the linear value is inf once (n-1)! exceeds
    float range, the log stays finite.  n = 0 is the divergent E1(0) branch
    and is rejected.
    """
    if n == 0:
        raise DomainError("Gamma(0) diverges; use the exponential-integral branch")
    if n < 0:
        raise DomainError("n must be a nonnegative integer")
    lg = math.lgamma(n)
    try:
        val = math.exp(lg) if n > 170 else float(math.factorial(n - 1))
    except OverflowError:
        val = math.inf
    return val, lg


def upper_gamma_log(n: int, x: float) -> float:
    """ln Gamma(n, x) for integer n >= 0, x > 0."""
    if x <= 0.0:
        raise DomainError("upper incomplete gamma requires x > 0")
    if n < 0:
        raise DomainError("n must be a nonnegative integer")
    if n == 0:
        return exp_e1_log(x)
    lx = math.log(x)
    logs = [k * lx - math.lgamma(k + 1) for k in range(n)]
    return math.lgamma(n) - x + _logsumexp(logs)


def upper_gamma(n: int, x: float) -> float:
    """Gamma(n, x) = (n-1)! e^(-x) sum_{k<n} x^k/k!  (E1(x) for n = 0)."""
    if n == 0:
        if x <= 0.0:
            raise DomainError("upper incomplete gamma requires x > 0")
        return exp_e1(x)
    lg = upper_gamma_log(n, x)
    return math.exp(lg) if lg < 709.0 else math.inf


def lower_gamma_int(n: int, x: float) -> float:
    """int_0^x u^n e^(-u) du = n! (1 - e^(-x) sum_{k<=n} x^k/k!).

    For x below the shape the complement form loses all significance, so the
    equivalent ascending series x^(n+1) e^(-x) sum_j x^j / prod(n+1+i) is
    used there; both are exact rearrangements of the same integral.
    """
    if x <= 0.0:
        raise DomainError("lower incomplete gamma requires x > 0")
    if n < 0:
        raise DomainError("n must be a nonnegative integer")
    if x < n + 1.0:
        term, total = 1.0, 1.0
        for j in range(1, 10_000):
            term *= x / (n + 1 + j)
            total += term
            if term < 1e-18 * total:
                break
        out = (n + 1) * math.log(x) - x - math.log(n + 1) + math.log(total)
        return math.exp(out) if out < 709.0 else math.inf
    lx = math.log(x)
    # Poisson survival e^(-x) sum x^k/k! computed keeping everything in logs.
    log_s = _logsumexp([k * lx - x - math.lgamma(k + 1) for k in range(n + 1)])
    if log_s >= 0.0:
        return 0.0
    out = math.lgamma(n + 1) + math.log1p(-math.exp(log_s))
    return math.exp(out) if out < 709.0 else math.inf


def f_log_moment_scaled(n_plus_1: int, x: float) -> float:
    """F(n+1, x) / n!  via the stable upward recurrence.

    F(n+1, x) = int_x^inf ln(u) u^n e^(-u) du; the normalized value stays
    O(ln n + |ln x|) for all n, so this is the overflow-free workhorse.
    """
    if n_plus_1 < 1:
        raise DomainError("order must be >= 1")
    if x <= 0.0:
        raise DomainError("F requires x > 0")
    lx = math.log(x)
    f = lx * math.exp(-x) + exp_e1(x)  # F(1, x)
    if n_plus_1 == 1:
        return f
    # increments: [ln x * x^j e^(-x) + Gamma(j, x)] / j!
    log_pois = -x  # x^j e^(-x) / j! at j = 0
    log_q = None   # ln of Gamma(j, x)/j!  (regularized upper over j)
    for j in range(1, n_plus_1):
        log_q = upper_gamma_log(j, x) - math.lgamma(j + 1)
        log_pois = log_pois + lx - math.log(j)
        f += lx * math.exp(log_pois) + math.exp(log_q)
    return f


def f_log_moment(n_plus_1: int, x: float) -> float:
    """F(n+1, x) = int_x^inf ln(u) u^n e^(-u) du (closed form, linear domain)."""
    scaled = f_log_moment_scaled(n_plus_1, x)
    lg = math.lgamma(n_plus_1)
    if lg + math.log(abs(scaled) + 1e-320) > 709.0:
        return math.copysign(math.inf, scaled)
    return scaled * math.exp(lg)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k); exact integer path for n <= 60."""
    if k < 0 or k > n:
        raise DomainError("require 0 <= k <= n")
    if n <= 60:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def harmonic_number(n: int) -> float:
    """H_n = sum_{s=1}^{n} 1/s (H_0 = 0)."""
    return math.fsum(1.0 / s for s in range(1, n + 1))


# ---------------------------------------------------------------------------
# signed log-domain values
# ---------------------------------------------------------------------------

class SignedLog:
    """A real number stored as (sign, ln|value|) with a running mass bound.

    `mass` tracks ln(sum of |contributions|) through + and *, giving a cheap
    conditioning estimate: rel. rounding error <= eps * exp(mass - mag).
    Used by the closed-form evaluators whose alternating binomial sums both
    overflow and cancel.
    """

    __slots__ = ("sign", "mag", "mass")

    def __init__(self, sign: int, mag: float, mass: float | None = None):
        if sign == 0 or mag == -math.inf:
            sign, mag = 0, -math.inf
        self.sign = sign
        self.mag = mag
        self.mass = mag if mass is None else mass

    @classmethod
    def from_float(cls, x: float) -> "SignedLog":
        if x == 0.0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, sign: int, mag: float) -> "SignedLog":
        return cls(sign, mag)

    def __neg__(self):
        return SignedLog(-self.sign, self.mag, self.mass)

    def __add__(self, other):
        if not isinstance(other, SignedLog):
            if other == 0:
                return self
            other = SignedLog.from_float(float(other))
        mass = _logaddexp(self.mass, other.mass)
        if self.sign == 0:
            return SignedLog(other.sign, other.mag, mass)
        if other.sign == 0:
            return SignedLog(self.sign, self.mag, mass)
        hi, lo = (self, other) if self.mag >= other.mag else (other, self)
        d = lo.mag - hi.mag
        if self.sign == other.sign:
            return SignedLog(hi.sign, hi.mag + math.log1p(math.exp(d)), mass)
        r = math.exp(d)
        if r == 1.0:
            return SignedLog(0, -math.inf, mass)
        return SignedLog(hi.sign, hi.mag + math.log1p(-r), mass)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_float(float(other))
        return SignedLog(self.sign * other.sign, self.mag + other.mag,
                         self.mass + other.mass)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, SignedLog):
            other = SignedLog.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("SignedLog division by zero")
        return SignedLog(self.sign * other.sign, self.mag - other.mag,
                         self.mass - other.mag)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.mag > 709.0:
            return math.copysign(math.inf, self.sign)
        return self.sign * math.exp(self.mag)

    def log_condition(self) -> float:
        """ln(sum|terms| / |result|); large values mean cancellation."""
        if self.sign == 0:
            return math.inf
        return self.mass - self.mag

    def __repr__(self):
        return f"SignedLog(sign={self.sign}, mag={self.mag:.6g}, mass={self.mass:.6g})"


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))
