import math
from dataclasses import dataclass

import numpy as np
import pytest
from scipy.integrate import quad

from capa_secrecy import montecarlo as mc
from capa_secrecy import secrecy as sec
from capa_secrecy import snr_models as snr
from capa_secrecy import spectral as spc
from capa_secrecy.snr_models import LinkBudget, Scenario
from capa_secrecy.specfun import DomainError

from conftest import LAMBDA, make_spectrum


@dataclass(frozen=True)
class _StubSpectrum:
    sigmas: np.ndarray
    wavelength_m: float


def test_estimates_are_seed_deterministic(ms4):
    lb = LinkBudget(100.0, 1.0, 5, Scenario.MIE)
    a = mc.mc_secrecy(lb, ms4, 1.0, 50_000, 123)
    b = mc.mc_secrecy(lb, ms4, 1.0, 50_000, 123)
    assert a == b
    c = mc.mc_secrecy(lb, ms4, 1.0, 50_000, 124)
    assert c[0].mean != a[0].mean


def test_standard_error_scaling(ms4):
    lb = LinkBudget(100.0, 1.0)
    r1, _ = mc.mc_secrecy(lb, ms4, 1.0, 100_000, 9)
    r4, _ = mc.mc_secrecy(lb, ms4, 1.0, 400_000, 9)
    assert r4.std_err == pytest.approx(r1.std_err / 2.0, rel=0.2)


def test_trial_floor_enforced(ms4):
    with pytest.raises(DomainError):
        mc.mc_secrecy(LinkBudget(1.0, 1.0), ms4, 1.0, 100, 0)


def test_rate_without_eavesdropper(ms4):
    lb = LinkBudget(100.0, 1e-9)
    rate, _ = mc.mc_secrecy(lb, ms4, 1.0, 400_000, 31)
    want = quad(lambda x: np.log2(1.0 + x) * snr.bob_pdf(x, lb, ms4),
                0.0, np.inf, limit=300)[0]
    assert rate.within(want)


def test_sop_limits_in_target_rate(ms4):
    lb = LinkBudget(100.0, 100.0)
    _, sop_small = mc.mc_secrecy(lb, ms4, 1e-9, 100_000, 5)
    # r0 -> 0+: P(rho_b < rho_e), strictly inside (0, 1)
    p = quad(lambda x: snr.bob_pdf(x, lb, ms4) * np.exp(-x / 100.0),
             0.0, np.inf, limit=300)[0]
    assert 0.0 < sop_small.mean < 1.0
    assert sop_small.within(p, 4.0)
    _, sop_big = mc.mc_secrecy(lb, ms4, 40.0, 100_000, 5)
    assert sop_big.mean == 1.0


def test_mie_point_matches_analytics(ms4):
    lb = LinkBudget(100.0, 1.0, 5, Scenario.MIE)
    rate, sop = mc.mc_secrecy(lb, ms4, 1.0, 1_000_000, 7)
    assert rate.within(sec.secrecy_rate_quadrature(lb, ms4))
    assert sop.within(sec.sop_closed(lb, ms4, 1.0))


def test_consistency_grid(ms4, ms6):
    # 32 configurations; quadrature analytics within 3 standard errors.
    # SOP gets the rule-of-three allowance for all-outage corners where the
    # sample standard error degenerates to zero.
    checks = []
    i = 0
    for ms in (ms4, ms6):
        for gb_db in (10.0, 20.0):
            for ge_db in (0.0, 10.0):
                for scen, k in ((Scenario.SE, 1), (Scenario.MIE, 3),
                                (Scenario.MCE, 3), (Scenario.MIE, 6)):
                    lb = LinkBudget(10 ** (gb_db / 10), 10 ** (ge_db / 10),
                                    k, scen)
                    rate, sop = mc.mc_secrecy(lb, ms, 1.0, 100_000, 1000 + i)
                    rq = sec.secrecy_rate_quadrature(lb, ms)
                    sq = sec.sop_closed(lb, ms, 1.0)
                    checks.append(abs(rq - rate.mean)
                                  <= 3 * rate.std_err + 1e-12)
                    checks.append(abs(sq - sop.mean)
                                  <= 3 * sop.std_err + 4.0 / sop.n_trials)
                    i += 1
    assert len(checks) == 64
    assert sum(checks) >= 63


def test_exact_eve_flat_spectrum_is_deterministic():
    stub = _StubSpectrum(np.full(6, LAMBDA / 2), LAMBDA)
    lb = LinkBudget(1.0, 1.0)
    est = mc.mc_exact_eve(lb, stub, 20_000, 3)
    assert est.mean == pytest.approx(1.0, abs=1e-12)
    assert est.std_err == pytest.approx(0.0, abs=1e-12)


def test_exact_eve_spread_grows_at_small_aperture(spec80):
    lb = LinkBudget(1.0, 1.0)
    small = make_spectrum(2.0, 120)
    cv_small = mc.coefficient_of_variation(mc.mc_exact_eve(lb, small, 30_000, 4))
    cv_large = mc.coefficient_of_variation(mc.mc_exact_eve(lb, spec80, 30_000, 4))
    assert cv_small > cv_large


def test_spda_element_ratio_constant():
    assert mc.SPDA_ELEMENT_APERTURE_RATIO == pytest.approx(0.11283791671, abs=1e-9)
    assert mc.SPDA_ELEMENT_APERTURE_RATIO == pytest.approx(
        (LAMBDA / (5.0 * math.sqrt(4.0 * math.pi))) / (LAMBDA / 2.0), rel=1e-12)


def test_spda_requires_two_elements():
    with pytest.raises(DomainError):
        geom = spc.ApertureGeometry(1.0, 2.0)  # fine geometrically
        lb = LinkBudget(1.0, 1.0)
        bad = spc.ApertureGeometry.__new__(spc.ApertureGeometry)
        object.__setattr__(bad, "wavelength_m", 1.0)
        object.__setattr__(bad, "aperture_len_m", 0.6)
        mc.spda_baseline(lb, bad, 1.0, 20_000, 0)


def test_spda_dominated_by_continuous_aperture():
    spec8 = make_spectrum(4.0, 200)
    ms8 = snr.build_psi(spec8)
    geom = spc.ApertureGeometry(LAMBDA, 4 * LAMBDA)
    for scen, k in ((Scenario.SE, 1), (Scenario.MIE, 4), (Scenario.MCE, 4)):
        lb = LinkBudget(100.0, 10.0, k, scen)
        cr, cs = mc.mc_secrecy(lb, ms8, 1.0, 100_000, 17)
        sr, ss = mc.spda_baseline(lb, geom, 1.0, 100_000, 17)
        assert cr.mean >= sr.mean
        assert cs.mean <= ss.mean


def test_channel_realization_recomputable(spec80):
    lb = LinkBudget(100.0, 1.0, 5, Scenario.MIE)
    rng = np.random.default_rng(5)
    real = mc.draw_channel_realization(lb, spec80, rng)
    assert real.phi_b.shape == spec80.sigmas.shape
    recomputed = lb.gamma_bar_b * float(spec80.sigmas @ np.abs(real.phi_b) ** 2)
    assert real.rho_b == pytest.approx(recomputed, rel=1e-14)
    assert real.rho_e >= 0.0
    # the coefficients are unit-variance complex Gaussians, so the drawn SNR
    # matches the block sampler's law (mean over many draws)
    draws = [mc.draw_channel_realization(lb, spec80, rng).rho_b
             for _ in range(4000)]
    want = lb.gamma_bar_b * float(np.sum(spec80.sigmas))
    se = np.std(draws) / math.sqrt(len(draws))
    assert abs(np.mean(draws) - want) <= 4 * se


def test_welford_merge_matches_direct():
    rng = np.random.default_rng(0)
    xs = rng.normal(3.0, 2.0, size=300_001)
    acc = mc._Welford()
    for i in range(0, xs.size, 77_777):
        acc.add(xs[i:i + 77_777])
    est = acc.estimate(0)
    assert est.mean == pytest.approx(float(np.mean(xs)), rel=1e-12)
    want_se = float(np.std(xs, ddof=1)) / math.sqrt(xs.size)
    assert est.std_err == pytest.approx(want_se, rel=1e-12)
