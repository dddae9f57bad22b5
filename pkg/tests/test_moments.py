"""Tests for the Dirichlet kernel, the exact term split and the analytic moments."""

import io

import numpy as np
import pytest

from cecfo.moments import (
    analytic_moments,
    decompose_terms,
    dirichlet_kernel,
    kernel_power_ratio,
    relative_tones,
    validate_moments,
    write_moment_report,
)
from cecfo.signal_model import (
    CfoVector,
    PowerDelayProfile,
    SystemConfig,
    make_trial_frame,
)
from cecfo.estimator import periodogram_at
from conftest import DMAX, small_frame


def kernel_by_summation(omega, n):
    return np.exp(1j * omega * np.arange(n)).sum() / np.sqrt(n)


class TestDirichletKernel:
    def test_zero_offset_is_sqrt_n(self):
        val = dirichlet_kernel(0.0, 800)
        assert val.real == np.sqrt(800) and val.imag == 0.0

    def test_kernel_zeros(self):
        for n in (64, 800):
            for m in (1, 2, n // 2, n - 1):
                assert abs(dirichlet_kernel(2 * np.pi * m / n, n)) < 1e-9

    def test_four_point_value(self):
        # sin(2*pi)/sin(pi/2) = 0
        assert abs(dirichlet_kernel(np.pi, 4)) < 1e-12

    def test_matches_summation(self):
        rng = np.random.default_rng(13)
        for n in (3, 17, 100, 1000):
            omegas = rng.uniform(-4.0, 4.0, 40)
            closed = dirichlet_kernel(omegas, n)
            direct = np.array([kernel_by_summation(w, n) for w in omegas])
            assert np.max(np.abs(closed - direct)) <= 1e-11 * np.sqrt(n)

    def test_magnitude_bound(self):
        rng = np.random.default_rng(14)
        n = 257
        omegas = rng.uniform(1e-3, 2 * np.pi - 1e-3, 500)
        mags = np.abs(dirichlet_kernel(omegas, n))
        assert np.all(mags < np.sqrt(n))
        assert abs(dirichlet_kernel(2 * np.pi, n)) == pytest.approx(np.sqrt(n), rel=1e-12)

    def test_continuity_through_singularity(self):
        # closed form and direct sum agree across the limit-branch threshold;
        # absolute error near 2*pi*m is set by rounding of the n*w products
        n = 1000
        for center in (0.0, 2 * np.pi, -4 * np.pi):
            for eps in (0.0, 1e-12, 1e-10, 3e-9, 1e-7):
                w = center + eps
                assert abs(dirichlet_kernel(w, n) - kernel_by_summation(w, n)) <= 1e-6

    def test_power_ratio_limit(self):
        assert kernel_power_ratio(0.0, 123) == 123**2
        assert kernel_power_ratio(2 * np.pi, 50) == 50**2
        x = 1e-4
        expected = np.sin(25 * x) ** 2 / np.sin(x / 2) ** 2
        assert kernel_power_ratio(x, 50) == pytest.approx(expected, rel=1e-12)


class TestDecomposition:
    def test_noiseless_frame(self):
        cfg = SystemConfig(m=4, k=3, n=60, l=2, gamma=2.0, delta_max=DMAX,
                           alpha=1.5, noise_var=0.0)
        pdp = PowerDelayProfile.uniform(3, 2)
        frame = make_trial_frame(cfg, pdp, 21, 0)
        d = decompose_terms(frame, 2, 1.0e-4)
        assert d.t1 == 0.0 and d.t2 == 0.0
        phi = periodogram_at(frame, 2, 1.0e-4) / cfg.pilot_power
        assert d.t3 == pytest.approx(phi, rel=1e-10)

    def test_zero_channel_frame(self):
        cfg = SystemConfig(m=4, k=3, n=60, l=2, gamma=2.0, delta_max=DMAX, alpha=1.5)
        pdp = PowerDelayProfile(np.zeros((3, 2)))
        frame = make_trial_frame(cfg, pdp, 22, 0)
        d = decompose_terms(frame, 1, -2.0e-4)
        assert d.t2 == 0.0 and d.t3 == 0.0
        phi = periodogram_at(frame, 1, -2.0e-4) / cfg.pilot_power
        assert d.t1 == pytest.approx(phi, rel=1e-10)

    def test_identity_on_random_frames(self, rng):
        for _ in range(100):
            cfg, frame = small_frame(rng, gamma=float(rng.uniform(0.05, 5.0)))
            k = int(rng.integers(1, cfg.k + 1))
            omega = float(rng.uniform(-2 * DMAX, 2 * DMAX))
            d = decompose_terms(frame, k, omega)
            phi = periodogram_at(frame, k, omega) / cfg.pilot_power
            assert d.t1 >= 0.0 and d.t3 >= 0.0
            assert abs(d.total - phi) <= 1e-10 * phi

    def test_requires_truth(self):
        cfg = SystemConfig(m=2, k=2, n=16, l=1, gamma=1.0, delta_max=DMAX, alpha=1.5)
        pdp = PowerDelayProfile.uniform(2, 1)
        frame = make_trial_frame(cfg, pdp, 1, 0, keep_truth=False)
        with pytest.raises(ValueError, match="truth"):
            decompose_terms(frame, 1, 0.0)


class TestAnalyticMoments:
    def base_cfg(self, m=80, gamma=0.1):
        return SystemConfig(m=m, k=10, n=1000, l=5, gamma=gamma, delta_max=DMAX, alpha=1.5)

    def test_noise_term_moments(self):
        cfg = self.base_cfg()
        pdp = PowerDelayProfile.uniform(10, 5)
        cfos = CfoVector(np.zeros(10))
        mom = analytic_moments(cfg, pdp, cfos, 1, 0.0)
        assert mom.mean_t1 == pytest.approx(10.0, rel=1e-12)
        assert mom.var_t1 == pytest.approx(1.25, rel=1e-12)
        assert mom.mean_t2 == 0.0

    def test_zero_power_profile(self):
        cfg = self.base_cfg()
        pdp = PowerDelayProfile(np.zeros((10, 5)))
        mom = analytic_moments(cfg, pdp, CfoVector(np.zeros(10)), 1, 0.0)
        assert mom.var_t2 == 0.0 and mom.mean_t3 == 0.0 and mom.var_t3 == 0.0

    def test_signal_term_peaks_at_true_offset(self):
        cfg = self.base_cfg()
        pdp = PowerDelayProfile.uniform(10, 5)
        rng = np.random.default_rng(23)
        cfos = CfoVector(rng.uniform(-DMAX, DMAX, 10))
        k = 4
        mom = analytic_moments(cfg, pdp, cfos, k, float(cfos.omega[k - 1]))
        # dominant term is N * beta_k; other users leak only weakly
        assert abs(mom.mean_t3 - cfg.n) <= 1.0

    def test_continuity_across_kernel_singularity(self):
        cfg = self.base_cfg()
        pdp = PowerDelayProfile.uniform(10, 5)
        cfos = CfoVector(np.full(10, 2.0e-4))
        vals = [
            analytic_moments(cfg, pdp, cfos, 2, 2.0e-4 + eps).mean_t3
            for eps in (-1e-10, -1e-12, 0.0, 1e-12, 1e-10)
        ]
        assert np.max(np.abs(np.diff(vals))) <= 1e-6 * vals[2]

    def test_relative_tone_layout(self):
        cfos = CfoVector(np.array([1e-4, -2e-4, 3e-4]))
        tones = relative_tones(3, 2, cfos, 5e-5)
        expected = 2 * np.pi * np.array([-1, 0, 1]) / 3 + cfos.omega - 5e-5
        np.testing.assert_allclose(tones, expected, rtol=1e-15)


class TestMonteCarloValidation:
    def small_setup(self, m=16):
        cfg = SystemConfig(m=m, k=4, n=128, l=3, gamma=0.5, delta_max=DMAX, alpha=1.5)
        pdp = PowerDelayProfile.uniform(4, 3)
        return cfg, pdp

    def test_empirical_tracks_analytic(self):
        cfg, pdp = self.small_setup()
        rows = validate_moments(cfg, pdp, trials=6000, seed=31)
        by_key = {(r.term, r.statistic): r for r in rows}
        assert set(by_key) == {(t, s) for t in ("T1", "T2", "T3") for s in ("mean", "var")}
        for key in ((("T1", "mean")), ("T1", "var"), ("T3", "mean")):
            row = by_key[key]
            assert abs(row.rel_dev) <= 0.10
        t2_mean = by_key[("T2", "mean")]
        assert abs(t2_mean.empirical) <= 4 * t2_mean.std_err

    def test_variances_scale_inversely_with_antennas(self):
        cfg, pdp = self.small_setup(m=8)
        cfg2, _ = self.small_setup(m=16)
        cfos = CfoVector(np.full(4, 1.0e-4))
        rows1 = {(r.term, r.statistic): r for r in
                 validate_moments(cfg, pdp, trials=20000, seed=32, cfos=cfos)}
        rows2 = {(r.term, r.statistic): r for r in
                 validate_moments(cfg2, pdp, trials=20000, seed=33, cfos=cfos)}
        for term in ("T1", "T2"):
            ratio = rows2[(term, "var")].empirical / rows1[(term, "var")].empirical
            assert ratio == pytest.approx(0.5, rel=0.10)
        # means carry no antenna dependence
        for term in ("T1", "T3"):
            a, b = rows1[(term, "mean")], rows2[(term, "mean")]
            assert abs(a.empirical - b.empirical) <= 3 * np.hypot(a.std_err, b.std_err)

    def test_report_csv_layout(self):
        cfg, pdp = self.small_setup(m=4)
        rows = validate_moments(cfg, pdp, trials=500, seed=34)
        buf = io.StringIO()
        write_moment_report(rows, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "term,statistic,analytic,empirical,rel_dev,std_err"
        assert len(lines) == 7
        t2_mean_line = [ln for ln in lines if ln.startswith("T2,mean")][0]
        assert t2_mean_line.split(",")[4] == ""  # rel_dev undefined at analytic zero

    def test_trial_floor(self):
        cfg, pdp = self.small_setup(m=4)
        with pytest.raises(ValueError):
            validate_moments(cfg, pdp, trials=1, seed=0)
