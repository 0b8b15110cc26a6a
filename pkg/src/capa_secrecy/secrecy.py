"""Secrecy rate, outage probability, and high-SNR characterizations.

Three eavesdropping scenarios (single, independent-max, collaborative-sum)
are evaluated three ways that must agree: term-by-term closed forms, a
single-integral quadrature route, and the Monte Carlo module.  The closed
rate forms are alternating binomial sums that overflow and cancel, so the
standard path runs in signed log-domain arithmetic with a running
conditioning estimate, and an extended wide-float path (mpmath) takes over
past a configurable DoF cap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate as spi
from scipy import special as sps

from . import snr_models as snr
from .snr_models import LinkBudget, MoschopoulosSeries, Scenario
from .specfun import (EXTENDED, STANDARD, DomainError, EvalPrecision,
                      EULER_GAMMA, SignedLog, exp_e1_log, harmonic_number,
                      log_binomial, scaled_e1)
from .spectral import ComputationError

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
DEFAULT_CLOSED_FORM_DOF_CAP = 16
_PRECISION_LOSS_THRESHOLD = 1e-3


class PrecisionLossError(ArithmeticError):
    """Cancellation ate the significand; use quadrature or extended mode."""

    def __init__(self, estimated_rel_error: float):
        self.estimated_rel_error = estimated_rel_error
        super().__init__(
            f"estimated relative error {estimated_rel_error:.2e} exceeds "
            f"{_PRECISION_LOSS_THRESHOLD:.0e}; use the quadrature evaluator "
            "or extended precision"
        )


@dataclass(frozen=True)
class SecrecyReport:
    scenario: Scenario
    rate_bits: float
    sop: float
    target_rate_r0: float
    hi_snr_slope: float
    hi_snr_offset: float
    diversity_order: int
    array_gain: float
    evaluator: str

    def __post_init__(self):
        if not (0.0 <= self.sop <= 1.0):
            raise ComputationError(f"SOP {self.sop} outside [0, 1]")
        if self.rate_bits < 0.0:
            raise ComputationError("secrecy rate must be nonnegative")


# ---------------------------------------------------------------------------
# numeric backends for the closed-form rate
# ---------------------------------------------------------------------------

class _FloatBackend:
    """Signed log-domain float arithmetic with mass (conditioning) tracking."""

    def scalar(self, x):
        return float(x)

    def zero(self):
        return SignedLog(0, -math.inf)

    def wrap(self, x):
        return SignedLog.from_float(float(x))

    def from_log(self, sign, mag):
        return SignedLog.from_log(sign, float(mag))

    def efrom(self, exponent):
        return SignedLog.from_log(1, float(exponent))

    def pow(self, base, k):
        return SignedLog.from_log(1, k * math.log(base))

    def factorial(self, n):
        return SignedLog.from_log(1, math.lgamma(n + 1))

    def comb(self, n, k):
        return SignedLog.from_log(1, log_binomial(n, k))

    def lnS(self, x):
        return SignedLog.from_float(math.log(x))

    def e1(self, x):
        return SignedLog.from_log(1, exp_e1_log(float(x)))

    def to_float(self, v):
        return v.to_float()


class _MPBackend:
    """Plain mpmath arithmetic at the ambient working precision."""

    def scalar(self, x):
        return mpmath.mpf(x)

    def zero(self):
        return mpmath.mpf(0)

    def wrap(self, x):
        return mpmath.mpf(x)

    def from_log(self, sign, mag):
        return sign * mpmath.exp(mpmath.mpf(mag))

    def efrom(self, exponent):
        return mpmath.exp(mpmath.mpf(exponent))

    def pow(self, base, k):
        return mpmath.mpf(base) ** k

    def factorial(self, n):
        return mpmath.factorial(n)

    def comb(self, n, k):
        return mpmath.binomial(n, k)

    def lnS(self, x):
        return mpmath.log(x)

    def e1(self, x):
        return mpmath.e1(x)

    def to_float(self, v):
        return float(v)


_FLOAT_BACKEND = _FloatBackend()


def _closed_rate_kernel(bk, theta, mu, k_gamma, dof, log_weights):
    """Mixture secrecy rate for Eve ~ Gamma(k_gamma, mu), Bob the gamma
    mixture with scale theta and shapes dof + q.

    k_gamma = 1 covers the single-Eve expression; the collaborative form is
    the same structure with the gamma-order sums carried along.  Returns a
    backend value (bits).
    """
    K = k_gamma
    sth = bk.scalar(theta)
    smu = bk.scalar(mu)
    beta = 1 / smu + 1 / sth
    c1 = sth * smu / (sth + smu)      # = 1/beta
    rmu = smu / (sth + smu)
    n_hi = dof + len(log_weights) - 1
    n_arr = n_hi + K                  # F/G orders up to n_hi + K - 1

    e_mu = bk.efrom(1 / smu)
    e_th = bk.efrom(1 / sth)
    e_mbeta = bk.efrom(-beta)
    ln_theta = bk.lnS(theta)
    ln_rmu = bk.lnS(rmu)
    ln_c1 = bk.lnS(c1)
    e1_beta = bk.e1(beta)

    # G[j] = Gamma(j+1, beta), F[j] = F(j+1, beta), upward recurrences.
    G = [None] * n_arr
    F = [None] * n_arr
    G[0] = e_mbeta
    F[0] = bk.lnS(beta) * e_mbeta + e1_beta
    for j in range(1, n_arr):
        pw = bk.pow(beta, j) * e_mbeta
        G[j] = j * G[j - 1] + pw
        F[j] = j * F[j - 1] + bk.lnS(beta) * pw + G[j - 1]

    # alternating gamma-order coefficients C(K-1,c)(-1)^(K-1-c) c1^(c+1)
    KA = [bk.comb(K - 1, c) * ((-1) ** (K - 1 - c)) * bk.pow(c1, c + 1)
          for c in range(K)]

    A = e_mu * sum((KA[c] * (F[c] + ln_rmu * G[c]) for c in range(K)), bk.zero())

    B = bk.factorial(K - 1) * bk.pow(mu, K) * bk.e1(1 / sth)
    for j in range(K):
        inner = ((-1) ** j) * e1_beta
        for t in range(1, j + 1):
            inner = inner + bk.comb(j, t) * ((-1) ** (j - t)) * bk.pow(c1, t) * G[t - 1]
        B = B - e_mu * (bk.factorial(K - 1) / bk.factorial(j)) * bk.pow(mu, K - j) * inner

    # SV[j] = sum_{r<j} rmu^r / r! * sum_c KA[c] G[r+c]   (no e^(1/mu) folded)
    SV = [bk.zero()] * (n_hi + 2)
    for j in range(1, n_hi + 2):
        r = j - 1
        blk = sum((KA[c] * G[r + c] for c in range(K)), bk.zero())
        SV[j] = SV[j - 1] + (bk.pow(rmu, r) if r else bk.wrap(1)) / bk.factorial(r) * blk

    # PS[k] = sum_{j=1..k} (U_j + V_j)/j!
    PS = [bk.zero()] * (n_hi + 1)
    for j in range(1, n_hi + 1):
        ub = sum((KA[b] * (F[j + b] + ln_rmu * G[j + b]) for b in range(K)), bk.zero())
        u = e_mu * bk.pow(rmu, j) * ub
        v = bk.factorial(j - 1) * e_mu * SV[j]
        PS[j] = PS[j - 1] + (u + v) / bk.factorial(j)

    bracket = [bk.factorial(k) * (A + B + PS[k] + ln_theta * e_mu * SV[k + 1])
               for k in range(n_hi)]

    # W2[f] = c1^(f+1) (F[f] + ln(c1) G[f]) feeds the log(1+rho_e) term.
    W2 = [bk.pow(c1, f + 1) * (F[f] + ln_c1 * G[f]) for f in range(n_arr)]
    gamma_k_mu = bk.factorial(K - 1) * bk.pow(mu, K)
    tau_prefix = [bk.zero()] * (n_hi + 1)
    e_beta = bk.efrom(beta)
    for m in range(n_hi):
        s = sum((bk.comb(K + m - 1, f) * ((-1) ** (K + m - 1 - f)) * W2[f]
                 for f in range(K + m)), bk.zero())
        tau = e_beta / gamma_k_mu / (bk.pow(theta, m) if m else bk.wrap(1)) \
            / bk.factorial(m) * s
        tau_prefix[m + 1] = tau_prefix[m] + tau

    total = bk.zero()
    for q, lw in enumerate(log_weights):
        n = dof + q
        ksum = bk.zero()
        for k in range(n):
            ksum = ksum + (bk.comb(n - 1, k) * ((-1) ** (n - 1 - k))
                           * bk.pow(theta, k + 1) * bracket[k])
        term1 = ksum * e_th / (bk.factorial(n - 1) * bk.pow(theta, n) * gamma_k_mu)
        total = total + bk.from_log(1, lw) * (term1 - tau_prefix[n])
    return total / bk.wrap(LN2)


def _rate_closed_dispatch(bk, lb: LinkBudget, ms: MoschopoulosSeries):
    theta = lb.gamma_bar_b * ms.sigma_min
    logw = ms.log_weights
    if lb.scenario == Scenario.SE:
        return _closed_rate_kernel(bk, theta, lb.gamma_bar_e, 1, ms.dof, logw)
    if lb.scenario == Scenario.MCE:
        return _closed_rate_kernel(bk, theta, lb.gamma_bar_e, lb.k_eves, ms.dof, logw)
    K = lb.k_eves
    total = bk.zero()
    for a in range(K):
        coeff = bk.wrap(K) * bk.comb(K - 1, a) * ((-1) ** a) / bk.wrap(a + 1)
        total = total + coeff * _closed_rate_kernel(
            bk, theta, lb.gamma_bar_e / (a + 1), 1, ms.dof, logw)
    return total


def secrecy_rate_closed(lb: LinkBudget, ms: MoschopoulosSeries,
                        prec: EvalPrecision | None = None, *,
                        dof_cap: int = DEFAULT_CLOSED_FORM_DOF_CAP) -> float:
    """Term-by-term closed-form secrecy rate in bits/channel use.

    With prec=None the standard float path is used up to `dof_cap` spatial
    DoF and the extended wide-float path beyond.  The standard path raises
    PrecisionLossError when its conditioning estimate says the alternating
    sums left fewer than ~3 significant digits.
    """
    if prec is None:
        prec = STANDARD if ms.dof <= dof_cap else EXTENDED
    val = _rate_closed_dispatch(_FLOAT_BACKEND, lb, ms)
    if prec.mode == "standard-float":
        cond = val.log_condition()
        est_rel = 2.3e-16 * math.exp(min(cond, 700.0))
        if est_rel > _PRECISION_LOSS_THRESHOLD:
            raise PrecisionLossError(est_rel)
        return max(val.to_float(), 0.0)
    # size the working precision from the mass bound of the float dry run
    mag = val.mag if val.sign != 0 and math.isfinite(val.mag) else 0.0
    digits = (val.mass - min(mag, 0.0)) / math.log(10.0) + 30.0
    dps = int(min(max(50.0, digits), 6000.0))
    with mpmath.workdps(dps):
        out = float(_rate_closed_dispatch(_MPBackend(), lb, ms))
    return max(out, 0.0)


# ---------------------------------------------------------------------------
# quadrature evaluators (independent route)
# ---------------------------------------------------------------------------

def _bob_spread(lb, ms):
    mean = lb.gamma_bar_b * float(np.sum(ms.sigmas))
    std = lb.gamma_bar_b * math.sqrt(float(np.sum(ms.sigmas ** 2)))
    return mean, std


def secrecy_rate_quadrature(lb: LinkBudget, ms: MoschopoulosSeries, *,
                            epsabs: float = 1e-9) -> float:
    """E{[log2(1+rho_b) - log2(1+rho_e)]^+} as a single integral.

    Integration by parts of the double integral gives
    (1/ln 2) int_0^inf  P(rho_b > x) F_e(x) / (1+x) dx.
    """
    def f(x):
        return snr.bob_survival(x, lb, ms) * snr.eve_cdf(x, lb) / (1.0 + x) / LN2

    mean, std = _bob_spread(lb, ms)
    split = mean + 12.0 * std + 1.0
    v1, e1_ = spi.quad(f, 0.0, split, limit=400, epsabs=epsabs, epsrel=1e-11)
    v2, e2_ = spi.quad(f, split, np.inf, limit=200, epsabs=epsabs, epsrel=1e-11)
    err = e1_ + e2_
    if err > 1e-6:
        raise ComputationError(f"rate quadrature achieved only +-{err:.2e} bits")
    return max(v1 + v2, 0.0)


def sop_quadrature(lb: LinkBudget, ms: MoschopoulosSeries, r0: float, *,
                   epsabs: float = 1e-10) -> float:
    """P(rho_b < 2^r0 (1 + rho_e) - 1) by integrating over Eve's density."""
    if r0 <= 0.0:
        raise DomainError("target secrecy rate must be positive")
    g = 2.0 ** r0

    def f(y):
        return snr.eve_pdf(y, lb) * snr.bob_cdf(g * (1.0 + y) - 1.0, lb, ms)

    scale = lb.gamma_bar_e * max(lb.k_eves, 1)
    split = 40.0 * scale
    v1, e1_ = spi.quad(f, 0.0, split, limit=400, epsabs=epsabs, epsrel=1e-11)
    v2, e2_ = spi.quad(f, split, np.inf, limit=200, epsabs=epsabs, epsrel=1e-11)
    if e1_ + e2_ > 1e-7:
        raise ComputationError(f"SOP quadrature achieved only +-{e1_ + e2_:.2e}")
    return float(min(max(v1 + v2, 0.0), 1.0))


# ---------------------------------------------------------------------------
# closed-form secrecy outage probability
# ---------------------------------------------------------------------------

def _poisson_tail_log(lam, m):
    """Upper bound on ln sum_{k>=m} Poisson(lam) pmf."""
    if lam <= 0.0:
        return -math.inf
    if m <= lam + 1.0:
        return 0.0
    logp = m * math.log(lam) - lam - math.lgamma(m + 1)
    return logp - math.log1p(-lam / (m + 1.0))


def _conv_tail_brackets(lam_p, make_b, b_total, b_tail_log, ns):
    """bracket(n) = sum_{k>=n} (Poisson(lam_p) (*) b)_k for each n in ns.

    The complementary head form b_total - head is algebraically identical
    (both sequences have known totals) and is used whenever the head carries
    under half the mass, so neither branch ever cancels.
    """
    n_hi = int(np.max(ns))
    m_len = n_hi + 64
    cap = 1 << 22
    while True:
        ks = np.arange(m_len, dtype=float)
        if lam_p > 0.0:
            a = np.exp(ks * math.log(lam_p) - lam_p - sps.gammaln(ks + 1.0))
        else:
            a = np.zeros(m_len)
            a[0] = 1.0
        b = make_b(m_len)
        c = np.convolve(a, b)[:m_len]
        cum = np.cumsum(c)
        rev = np.cumsum(c[::-1])[::-1]
        head = cum[ns - 1]
        tail = rev[ns]
        need_tail = head >= 0.5 * b_total
        if not np.any(need_tail):
            break
        half = m_len // 2
        miss_log = np.logaddexp(_poisson_tail_log(lam_p, half), b_tail_log(half))
        floor = max(float(np.min(tail[need_tail])), 1e-280)
        if miss_log < math.log(floor) - 21.0 or m_len >= cap:
            if m_len >= cap:
                log.warning("SOP tail window capped at %d terms", cap)
            break
        m_len = min(2 * m_len, cap)
    return np.where(need_tail, tail, b_total - head)


def _geometric_b(theta, g_mu, shift):
    """b_m = prefac * r^m with prefac = theta/denom, r = g_mu/denom,
    denom = shift*theta + g_mu; sums to 1/shift."""
    denom = shift * theta + g_mu
    log_pref = math.log(theta) - math.log(denom)
    log_r = math.log1p(-shift * theta / denom)

    def make(m):
        return np.exp(log_pref + np.arange(m) * log_r)

    def tail_log(m):
        return log_pref + m * log_r - math.log1p(-math.exp(log_r))

    return make, 1.0 / shift, tail_log


def _negbin_b(theta, g_mu, k):
    """b_m = C(k+m-1, m) (1-p)^k p^m with p = g_mu/(theta+g_mu); sums to 1."""
    log_p = math.log(g_mu) - math.log(theta + g_mu)
    log_q = math.log(theta) - math.log(theta + g_mu)

    def make(m):
        ms_ = np.arange(m, dtype=float)
        lb_ = sps.gammaln(k + ms_) - sps.gammaln(ms_ + 1.0) - sps.gammaln(float(k))
        return np.exp(lb_ + k * log_q + ms_ * log_p)

    def tail_log(m):
        ratio = math.exp(log_p) * (k + m) / (m + 1.0)
        if ratio >= 1.0:
            return 0.0
        lpmf = (sps.gammaln(k + m) - sps.gammaln(m + 1.0) - sps.gammaln(float(k))
                + k * log_q + m * log_p)
        return lpmf - math.log1p(-ratio)

    return make, 1.0, tail_log


def sop_closed(lb: LinkBudget, ms: MoschopoulosSeries, r0: float) -> float:
    """Closed-form secrecy outage probability at target rate r0 (bits).

    The per-shape bracket is the upper tail of a Poisson((2^r0-1)/theta)
    convolved with a geometric (single / independent Eves) or negative
    binomial (collaborative) sequence; this is the same finite double sum as
    the printed expression, reorganized so nothing cancels even when the
    outage probability is ~1e-20.
    """
    if r0 <= 0.0:
        raise DomainError("target secrecy rate must be positive")
    g = 2.0 ** r0
    theta = lb.gamma_bar_b * ms.sigma_min
    g_mu = g * lb.gamma_bar_e
    lam_p = (g - 1.0) / theta
    ns = ms.dof + np.arange(ms.q_max + 1)
    w = ms.weights

    if lb.scenario in (Scenario.SE, Scenario.MIE):
        kk = 1 if lb.scenario == Scenario.SE else lb.k_eves
        acc = np.zeros_like(w)
        for nprime in range(kk):
            make, total, tail_log = _geometric_b(theta, g_mu, nprime + 1.0)
            br = _conv_tail_brackets(lam_p, make, total, tail_log, ns)
            coeff = kk * math.comb(kk - 1, nprime) * (-1.0) ** nprime
            acc = acc + coeff * br
        val = float(w @ acc)
    else:
        make, total, tail_log = _negbin_b(theta, g_mu, lb.k_eves)
        br = _conv_tail_brackets(lam_p, make, total, tail_log, ns)
        val = float(w @ br)

    if val < -1e-9 or val > 1.0 + 1e-9:
        log.warning("SOP %.3e clamped to [0, 1] (excursion beyond 1e-9)", val)
    return float(min(max(val, 0.0), 1.0))


# ---------------------------------------------------------------------------
# high-SNR characterization
# ---------------------------------------------------------------------------

def high_snr_slope(ms: MoschopoulosSeries) -> float:
    """prefix * sum(psi_q): the multiplexing coefficient, 1 by normalization."""
    return float(np.exp(ms.log_weight_prefix) * math.fsum(ms.psis))


def _weighted_harmonic(ms: MoschopoulosSeries) -> float:
    h = np.array([harmonic_number(ms.dof + q - 1) for q in range(ms.q_max + 1)])
    w = ms.weights
    return float((w @ h) / np.sum(w))


def _offset_eve_term(lb: LinkBudget) -> float:
    """The e^x E1(x) combination entering the power offset, per scenario."""
    mu = lb.gamma_bar_e
    if lb.scenario == Scenario.SE:
        return scaled_e1(1.0 / mu)
    if lb.scenario == Scenario.MCE:
        return scaled_e1(1.0 / (lb.k_eves * mu))
    K = lb.k_eves
    terms = [K * math.comb(K - 1, a) * (-1.0) ** a / (1 + a)
             * scaled_e1((1 + a) / mu) for a in range(K)]
    return math.fsum(terms)


def high_snr_offset(lb: LinkBudget, ms: MoschopoulosSeries) -> float:
    """High-SNR power offset in log2-SNR units (3.01 dB per unit)."""
    return (-math.log2(ms.sigma_min)
            + (EULER_GAMMA + _offset_eve_term(lb) - _weighted_harmonic(ms)) / LN2)


def asymptotic_rate(lb: LinkBudget, ms: MoschopoulosSeries) -> float:
    """High-SNR affine approximation slope*(log2 SNR - offset), clamped at 0.

    Documented validity: Bob SNR of roughly 30 dB and above.
    """
    s = high_snr_slope(ms)
    return max(s * (math.log2(lb.gamma_bar_b) - high_snr_offset(lb, ms)), 0.0)


def diversity_and_gain(lb: LinkBudget, ms: MoschopoulosSeries,
                       r0: float) -> tuple[int, float]:
    """Outage exponent (= spatial DoF in every scenario) and array gain."""
    if r0 <= 0.0:
        raise DomainError("target secrecy rate must be positive")
    g = 2.0 ** r0
    x = (g - 1.0) / (g * lb.gamma_bar_e)
    dof = ms.dof
    lx = math.log(x) if x > 0 else -math.inf
    mm = np.arange(dof + 1, dtype=float)
    base = mm * lx - sps.gammaln(mm + 1.0)
    if lb.scenario == Scenario.SE:
        log_s = sps.logsumexp(base)
    elif lb.scenario == Scenario.MIE:
        K = lb.k_eves
        y4 = np.array([
            math.fsum(math.comb(K - 1, n) * (-1.0) ** n
                      * (1.0 / (n + 1)) ** (dof - m + 1) for n in range(K))
            for m in range(dof + 1)])
        log_s = math.log(K) + sps.logsumexp(base + np.log(y4))
    else:
        K = lb.k_eves
        lbin = np.array([log_binomial(dof - m + K - 1, K - 1)
                         for m in range(dof + 1)])
        log_s = sps.logsumexp(base + lbin)
    log_prod = float(np.sum(ms.log_sigmas))
    gain = math.exp((log_prod - log_s) / dof) / (g * lb.gamma_bar_e)
    return dof, gain


def sop_asymptotic(lb: LinkBudget, ms: MoschopoulosSeries, r0: float) -> float:
    """Leading outage law (Ag * gamma_b)^(-dof), for plotting."""
    dof, gain = diversity_and_gain(lb, ms, r0)
    expo = -dof * (math.log(gain) + math.log(lb.gamma_bar_b))
    return math.exp(expo) if expo < 700.0 else math.inf


def secrecy_report(lb: LinkBudget, ms: MoschopoulosSeries, r0: float,
                   evaluator: str = "quadrature",
                   prec: EvalPrecision | None = None) -> SecrecyReport:
    """Evaluate every secrecy metric with one rate/SOP evaluator."""
    if evaluator == "closed-form":
        rate = secrecy_rate_closed(lb, ms, prec)
        sop = sop_closed(lb, ms, r0)
    elif evaluator == "quadrature":
        rate = secrecy_rate_quadrature(lb, ms)
        sop = sop_quadrature(lb, ms, r0)
    elif evaluator == "asymptotic":
        rate = asymptotic_rate(lb, ms)
        sop = min(sop_asymptotic(lb, ms, r0), 1.0)
    else:
        raise DomainError(f"unknown evaluator {evaluator!r}")
    dof, gain = diversity_and_gain(lb, ms, r0)
    return SecrecyReport(
        scenario=lb.scenario, rate_bits=rate, sop=sop, target_rate_r0=r0,
        hi_snr_slope=high_snr_slope(ms), hi_snr_offset=high_snr_offset(lb, ms),
        diversity_order=dof, array_gain=gain, evaluator=evaluator,
    )


# ---------------------------------------------------------------------------
# identity and ordering checks (exact where rational)
# ---------------------------------------------------------------------------

def binomial_unit_identity(k: int) -> Fraction:
    """K sum_d C(K-1,d) (-1)^d / (d+1); equals 1 for every positive K."""
    return k * sum(Fraction((-1) ** d * math.comb(k - 1, d), d + 1)
                   for d in range(k))

def independent_eve_offset_term(k: int, gamma_e: float) -> float:
    """y(K) = K sum_a C(K-1,a) (-1)^a/(1+a) e^((1+a)/ge) E1((1+a)/ge),
    increasing in K."""
    return math.fsum(k * math.comb(k - 1, a) * (-1.0) ** a / (1 + a)
                     * scaled_e1((1 + a) / gamma_e) for a in range(k))

def independent_eve_gain_term(k: int, dof: int, m: int) -> Fraction:
    """y(K) = K sum_n C(K-1,n)(-1)^n (n+1)^(m-dof-1); 1 at m = dof,
    increasing in K below it."""
    return k * sum(Fraction((-1) ** n * math.comb(k - 1, n), (n + 1) ** (dof - m + 1))
                   for n in range(k))

def collaborative_vs_independent_offset_gap(k: int, gamma_e: float) -> float:
    """e^(1/(K ge)) E1(1/(K ge)) minus the independent-Eves combination.

    Positive for K >= 2: the collaborative offset exceeds the independent
    one.  (The source text asserts this sign in the claim but flips it in
    the final proof step; the positive sign is the numerically correct one
    and the one consistent with the offset ordering.)
    """
    return scaled_e1(1.0 / (k * gamma_e)) - independent_eve_offset_term(k, gamma_e)

def collaborative_gain_term_gap(k: int, dof: int, m: int) -> Fraction:
    """C(dof-m+K-1, K-1) - independent term; 0 at m = dof, positive below."""
    return math.comb(dof - m + k - 1, k - 1) - independent_eve_gain_term(k, dof, m)


# ---------------------------------------------------------------------------
# exact small-1/SNR polynomial expansion of the outage probability
# ---------------------------------------------------------------------------

def _poly_mul(a, b, order):
    out = [Fraction(0)] * (order + 1)
    for i, ai in enumerate(a[:order + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[:order + 1 - i]):
            out[i + j] += ai * bj
    return out


def _inv_binom_series(c: Fraction, p: int, order: int):
    """(1 + c z)^(-p) as a truncated series, p >= 1."""
    return [Fraction(math.comb(p + i - 1, i)) * (-c) ** i for i in range(order + 1)]


def _exp_series(c: Fraction, order: int):
    """exp(c z) truncated."""
    return [c ** i / math.factorial(i) for i in range(order + 1)]


def psi_fractions(sigmas, q_terms: int):
    """Moschopoulos coefficients in exact rational arithmetic."""
    sig = [Fraction(s) for s in sigmas]
    smin = min(sig)
    ratios = [1 - smin / s for s in sig]
    psis = [Fraction(1)]
    powers = [Fraction(1)] * len(sig)
    b = []
    for _ in range(q_terms):
        powers = [p * r for p, r in zip(powers, ratios)]
        b.append(sum(powers))
    for q in range(1, q_terms + 1):
        psis.append(sum(b[k - 1] * psis[q - k] for k in range(1, q + 1)) / q)
    return psis


def sop_inverse_snr_poly(scenario: Scenario, sigmas, gamma_e, r0: int,
                         q: int, order: int, k_eves: int = 1):
    """Exact series in z = 1/gamma_b of the q-th outage bracket.

    Inputs are taken as rationals, so the cancellation of every coefficient
    below z^dof is checked exactly.  Returns Fraction coefficients
    [z^0 .. z^order].
    """
    sig = [Fraction(s) for s in sigmas]
    n_dof = len(sig)
    smin = min(sig)
    g = Fraction(2) ** r0
    mu = Fraction(gamma_e)
    gmu = g * mu
    n = n_dof + q
    e_ser = _exp_series(-(g - 1) / smin, order)

    def bracket_for(shift: int):
        c = gmu / (smin * shift)
        dpows = {}
        cq = [Fraction(0)] * (order + 1)
        for k in range(min(n - 1, order) + 1):
            for m in range(k + 1):
                pref = ((g - 1) ** (k - m) * gmu ** m
                        / math.factorial(k - m) / smin ** k
                        * Fraction(1, shift) ** (m + 1))
                if m + 1 not in dpows:
                    dpows[m + 1] = _inv_binom_series(c, m + 1, order)
                d = dpows[m + 1]
                for i in range(order + 1 - k):
                    cq[k + i] += pref * d[i]
        ec = _poly_mul(e_ser, cq, order)
        out = [-x for x in ec]
        out[0] += Fraction(1, shift)
        return out

    if scenario == Scenario.SE:
        return bracket_for(1)
    if scenario == Scenario.MIE:
        total = [Fraction(0)] * (order + 1)
        for nprime in range(k_eves):
            coeff = k_eves * math.comb(k_eves - 1, nprime) * (-1) ** nprime
            part = bracket_for(nprime + 1)
            total = [t + coeff * p for t, p in zip(total, part)]
        return total
    # collaborative: negative-binomial weights
    K = k_eves
    c = gmu / smin
    cq = [Fraction(0)] * (order + 1)
    dpows = {}
    for k in range(min(n - 1, order) + 1):
        for m in range(k + 1):
            pref = (Fraction(math.comb(k, m)) * (g - 1) ** (k - m) * gmu ** m
                    * Fraction(math.factorial(K + m - 1),
                               math.factorial(K - 1) * math.factorial(k))
                    / smin ** k)
            if K + m not in dpows:
                dpows[K + m] = _inv_binom_series(c, K + m, order)
            d = dpows[K + m]
            for i in range(order + 1 - k):
                cq[k + i] += pref * d[i]
    ec = _poly_mul(e_ser, cq, order)
    out = [-x for x in ec]
    out[0] += 1
    return out


def sop_poly_mixture(scenario: Scenario, sigmas, gamma_e, r0: int,
                     q_terms: int, order: int, k_eves: int = 1):
    """Exact mixture-weighted series sum_q W psi_q * bracket_q."""
    sig = [Fraction(s) for s in sigmas]
    smin = min(sig)
    prefix = smin ** len(sig)
    for s in sig:
        prefix /= s
    psis = psi_fractions(sigmas, q_terms)
    total = [Fraction(0)] * (order + 1)
    for q in range(q_terms + 1):
        part = sop_inverse_snr_poly(scenario, sigmas, gamma_e, r0, q, order,
                                    k_eves)
        wq = prefix * psis[q]
        total = [t + wq * p for t, p in zip(total, part)]
    return total


def sop_leading_coeff(scenario: Scenario, sigmas, gamma_e, r0: int,
                      k_eves: int = 1) -> Fraction:
    """Exact z^dof coefficient of the outage expansion (array-gain law)."""
    sig = [Fraction(s) for s in sigmas]
    n = len(sig)
    g = Fraction(2) ** r0
    gmu = g * Fraction(gamma_e)
    x = (g - 1) / gmu
    prod = Fraction(1)
    for s in sig:
        prod *= s
    if scenario == Scenario.SE:
        s_m = sum(x ** m / math.factorial(m) for m in range(n + 1))
    elif scenario == Scenario.MIE:
        s_m = k_eves * sum(
            x ** m / math.factorial(m)
            * sum(Fraction((-1) ** d * math.comb(k_eves - 1, d),
                           (d + 1) ** (n - m + 1)) for d in range(k_eves))
            for m in range(n + 1))
    else:
        s_m = sum(x ** m / math.factorial(m)
                  * math.comb(n - m + k_eves - 1, k_eves - 1)
                  for m in range(n + 1))
    return s_m * gmu ** n / prod
