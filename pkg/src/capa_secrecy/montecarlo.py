"""Monte Carlo oracle and the half-wavelength discrete-array baseline.

Channel realizations are drawn from the eigen-expansion of the aperture
kernel (Bob) and from the per-scenario eavesdropper laws, in fixed-size
blocks with seeds derived from one root seed, so estimates are bit-exact
reproducible and independent of how work is scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .snr_models import LinkBudget, sample_bob, sample_eve
from .spectral import ApertureGeometry, SpectralDecomposition
from .specfun import DomainError

_BLOCK = 1 << 17  # fixed block size keeps merges deterministic


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the legitimate channel's expansion coefficients.

    phi_b holds a unit-variance complex Gaussian per retained eigenvalue;
    rho_b is the resulting instantaneous SNR and must stay recomputable from
    the stored coefficients.  The block samplers below draw the
    distributionally identical |phi|^2 exponentials directly; this type is
    the single-realization view.
    """

    phi_b: np.ndarray
    rho_b: float
    rho_e: float

    def __post_init__(self):
        if self.rho_b < 0.0 or self.rho_e < 0.0:
            raise DomainError("instantaneous SNRs must be nonnegative")


def draw_channel_realization(lb: LinkBudget, spec: SpectralDecomposition,
                             rng: np.random.Generator) -> ChannelRealization:
    """Draw a realization over every retained eigenvalue of the expansion."""
    sig = np.asarray(spec.sigmas, dtype=float)
    phi = (rng.standard_normal(sig.size) + 1j * rng.standard_normal(sig.size))
    phi *= math.sqrt(0.5)
    rho_b = lb.gamma_bar_b * float(sig @ np.abs(phi) ** 2)
    return ChannelRealization(phi_b=phi, rho_b=rho_b,
                              rho_e=sample_eve(lb, rng))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n_trials: int
    seed: int

    def within(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(value - self.mean) <= n_sigma * self.std_err


class _Welford:
    """Streaming mean/variance with exact block merging."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, xs: np.ndarray):
        n_b = xs.size
        if n_b == 0:
            return
        mean_b = float(np.mean(xs))
        m2_b = float(np.sum((xs - mean_b) ** 2))
        n = self.n + n_b
        delta = mean_b - self.mean
        self.m2 += m2_b + delta * delta * self.n * n_b / n
        self.mean += delta * n_b / n
        self.n = n

    def estimate(self, seed: int) -> McEstimate:
        var = self.m2 / max(self.n - 1, 1)
        return McEstimate(self.mean, math.sqrt(max(var, 0.0) / self.n),
                          self.n, seed)


def _block_rngs(seed: int, n_trials: int):
    n_blocks = (n_trials + _BLOCK - 1) // _BLOCK
    for b in range(n_blocks):
        size = min(_BLOCK, n_trials - b * _BLOCK)
        yield np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,))), size


def mc_secrecy(lb: LinkBudget, src, r0: float, n_trials: int,
               seed: int) -> tuple[McEstimate, McEstimate]:
    """Empirical secrecy rate and outage probability.

    `src` supplies Bob's eigenvalue weights (a SpectralDecomposition,
    MoschopoulosSeries, or plain array).  Eve draws come from the
    per-scenario SNR laws, independent of Bob's channel.
    """
    if n_trials < 10_000:
        raise DomainError("need at least 1e4 trials")
    if r0 <= 0.0:
        raise DomainError("target secrecy rate must be positive")
    g = 2.0 ** r0
    rate_acc, sop_acc = _Welford(), _Welford()
    for rng, size in _block_rngs(seed, n_trials):
        rho_b = sample_bob(src, lb, rng, size=size)
        rho_e = sample_eve(lb, rng, size=size)
        rates = np.maximum(np.log2(1.0 + rho_b) - np.log2(1.0 + rho_e), 0.0)
        outage = (rho_b < g * (1.0 + rho_e) - 1.0).astype(float)
        rate_acc.add(rates)
        sop_acc.add(outage)
    return rate_acc.estimate(seed), sop_acc.estimate(seed)


def mc_exact_eve(lb: LinkBudget, spec: SpectralDecomposition, n_trials: int,
                 seed: int) -> McEstimate:
    """Conditional-variance ratio of Eve's effective signal given Bob's channel.

    Per realization of Bob's expansion coefficients, computes
    sum(sigma^2 |Phi|^2) / sum(sigma |Phi|^2) over every retained eigenvalue
    and reports it normalized by lambda/2.  A mean near 1 with a small
    coefficient of variation validates treating Eve's SNR as independent of
    Bob's channel.
    """
    sig = np.asarray(spec.sigmas, dtype=float)
    half_lam = 0.5 * spec.wavelength_m
    acc = _Welford()
    for rng, size in _block_rngs(seed, n_trials):
        e = rng.standard_exponential((size, sig.size))
        ratio = (e @ (sig ** 2)) / (e @ sig)
        acc.add(ratio / half_lam)
    return acc.estimate(seed)


def coefficient_of_variation(est: McEstimate) -> float:
    """Sample std / mean recovered from a Monte Carlo estimate."""
    return est.std_err * math.sqrt(est.n_trials) / est.mean


# ---------------------------------------------------------------------------
# spatially-discrete half-wavelength baseline
# ---------------------------------------------------------------------------

SPDA_ELEMENT_APERTURE_RATIO = 2.0 / (5.0 * math.sqrt(4.0 * math.pi))
"""Element length lambda/(5 sqrt(4 pi)) over the lambda/2 spacing, ~0.11284."""


def spda_baseline(lb: LinkBudget, geom: ApertureGeometry, r0: float,
                  n_trials: int, seed: int) -> tuple[McEstimate, McEstimate]:
    """Monte Carlo secrecy rate/SOP of a half-wavelength discrete array.

    floor(2L/lambda) elements with i.i.d. unit Rayleigh entries (the sinc
    correlation vanishes at half-wavelength spacing); the per-element power
    is the continuous per-mode level lambda/2 scaled by the element-aperture
    ratio, and Eve's average SNR scales by the same ratio.  The per-element
    gain normalization is a documented modeling assumption; the comparison
    targets are qualitative (continuous aperture dominates).
    """
    n_el = int(2.0 * geom.aperture_len_m / geom.wavelength_m)
    if n_el < 2:
        raise DomainError("need at least 2 array elements (aperture too short)")
    if r0 <= 0.0:
        raise DomainError("target secrecy rate must be positive")
    a_el = SPDA_ELEMENT_APERTURE_RATIO
    bob_scale = lb.gamma_bar_b * 0.5 * geom.wavelength_m * a_el
    eve_lb = LinkBudget(lb.gamma_bar_b, lb.gamma_bar_e * a_el, lb.k_eves,
                        lb.scenario)
    g = 2.0 ** r0
    rate_acc, sop_acc = _Welford(), _Welford()
    for rng, size in _block_rngs(seed, n_trials):
        rho_b = bob_scale * rng.standard_exponential((size, n_el)).sum(axis=1)
        rho_e = sample_eve(eve_lb, rng, size=size)
        rates = np.maximum(np.log2(1.0 + rho_b) - np.log2(1.0 + rho_e), 0.0)
        outage = (rho_b < g * (1.0 + rho_e) - 1.0).astype(float)
        rate_acc.add(rates)
        sop_acc.add(outage)
    return rate_acc.estimate(seed), sop_acc.estimate(seed)
