"""Tests for the Monte-Carlo MSE harness and the minimum-SNR search."""

import time
from dataclasses import replace

import numpy as np
import pytest

from cecfo.estimator import build_grid
from cecfo.experiments import (
    BracketError,
    InfeasibleTargetError,
    min_snr_for_mse,
    quantization_floor,
    run_mse,
    sweep_alpha,
    sweep_m,
)
from cecfo.signal_model import PowerDelayProfile, SystemConfig, derive_seed, make_trial_frame
from conftest import DMAX


def cheap_cfg(**overrides):
    base = dict(m=8, k=2, n=512, l=2, gamma=1.0, delta_max=DMAX, alpha=1.5)
    base.update(overrides)
    return SystemConfig(**base)


class TestRunMse:
    def test_bit_identical_reproducibility(self):
        cfg = cheap_cfg(gamma=0.05)
        a = run_mse(cfg, 50, 123)
        b = run_mse(cfg, 50, 123)
        assert a.mse == b.mse and a.half_width == b.half_width
        np.testing.assert_array_equal(a.per_user, b.per_user)

    def test_schedule_independence(self):
        cfg = cheap_cfg(gamma=0.05)
        serial = run_mse(cfg, 40, 7, workers=1)
        parallel = run_mse(cfg, 40, 7, workers=2)
        assert serial.mse == parallel.mse
        np.testing.assert_array_equal(serial.per_user, parallel.per_user)

    def test_pooled_equals_mean_of_per_user(self):
        cfg = cheap_cfg(k=4, n=400, gamma=0.2)
        est = run_mse(cfg, 60, 5)
        assert est.mse == pytest.approx(float(est.per_user.mean()), rel=1e-12)

    def test_worst_case_bound(self):
        cfg = cheap_cfg(gamma=1e-4)  # deep noise: estimates are close to random
        grid = build_grid(cfg.n, cfg.alpha, cfg.delta_max)
        est = run_mse(cfg, 80, 11)
        assert 0.0 < est.mse <= (grid.t0 * grid.spacing + DMAX) ** 2

    def test_noiseless_mse_sits_at_quantization_floor(self):
        cfg = cheap_cfg(m=2, k=4, n=1000, noise_var=0.0)
        grid = build_grid(cfg.n, cfg.alpha, cfg.delta_max)
        est = run_mse(cfg, 400, 17)
        floor = quantization_floor(grid)
        assert est.mse == pytest.approx(floor, rel=0.10)

    def test_trials_floor(self):
        with pytest.raises(ValueError):
            run_mse(cheap_cfg(), 0, 1)


class TestSweepAlpha:
    def test_equals_independent_reruns(self):
        cfg = cheap_cfg(gamma=0.1, n=256)
        table = sweep_alpha(cfg, [1.3, 1.6], trials=40, seed=9)
        for alpha, est in table:
            direct = run_mse(replace(cfg, alpha=alpha), 40, 9)
            assert est.mse == direct.mse
            np.testing.assert_array_equal(est.per_user, direct.per_user)

    def test_common_random_numbers_across_alpha(self):
        # per-trial draws depend only on (seed, trial), never on the grid
        cfg_a = cheap_cfg(alpha=1.3, n=256)
        cfg_b = cheap_cfg(alpha=1.9, n=256)
        pdp = PowerDelayProfile.uniform(cfg_a.k, cfg_a.l)
        for trial in (0, 3, 11):
            fa = make_trial_frame(cfg_a, pdp, 77, trial)
            fb = make_trial_frame(cfg_b, pdp, 77, trial)
            np.testing.assert_array_equal(fa.samples, fb.samples)

    def test_mse_non_increasing_within_confidence(self):
        cfg = cheap_cfg(m=16, k=2, n=512, gamma=0.02)
        table = sweep_alpha(cfg, [1.2, 1.4, 1.6, 1.8], trials=300, seed=13)
        for (_, lo), (_, hi) in zip(table[1:], table[:-1]):
            assert lo.mse <= hi.mse + lo.half_width + hi.half_width

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            sweep_alpha(cheap_cfg(), [1.5, 0.9], trials=5, seed=0)

    def test_half_width_shrinks_with_sqrt_trials(self):
        cfg = cheap_cfg(m=4, k=2, n=200, gamma=0.05)
        small = run_mse(cfg, 2000, 19)
        big = run_mse(cfg, 4000, 19)
        ratio = big.half_width / small.half_width
        assert ratio == pytest.approx(1 / np.sqrt(2), rel=0.20)


class TestMinSnr:
    def test_search_result_contract(self):
        cfg = cheap_cfg()
        target = 2e-7
        res = min_snr_for_mse(cfg, target, trials=150, tol_db=0.2,
                              bracket_db=(-30.0, 0.0), seed=41)
        lo, hi = res.bracket
        assert hi - lo <= 0.2
        assert res.gamma_star_db == hi
        evals = dict(res.evaluations)
        # the returned point meets the target; the bracket straddles it
        assert evals[res.gamma_star_db].mse <= target
        assert evals[lo].mse > target
        assert evals[-30.0].mse > target >= evals[0.0].mse

    def test_matches_direct_measurements(self):
        # decomposed gamma scan is exactly the direct synthesis at any SNR
        cfg = cheap_cfg(m=4, n=256)
        res = min_snr_for_mse(cfg, 5e-7, trials=60, tol_db=0.5,
                              bracket_db=(-30.0, 0.0), seed=43)
        for gamma_db, est in res.evaluations:
            direct = run_mse(replace(cfg, gamma=10 ** (gamma_db / 10.0)), 60, 43)
            assert est.mse == direct.mse

    def test_infeasible_target_below_floor(self):
        # a coarse grid cannot beat its own quantization floor
        cfg = cheap_cfg(m=2, k=10, n=800, alpha=1.2)
        floor = quantization_floor(build_grid(800, 1.2, DMAX))
        assert floor > 1e-8
        with pytest.raises(InfeasibleTargetError):
            min_snr_for_mse(cfg, 1e-8, trials=10, seed=1)

    def test_bracket_must_straddle(self):
        cfg = cheap_cfg()
        with pytest.raises(BracketError):
            # both ends far too noisy to meet the target
            min_snr_for_mse(cfg, 2e-7, trials=80, bracket_db=(-35.0, -30.0), seed=2)
        with pytest.raises(BracketError):
            # low end already meets the target
            min_snr_for_mse(cfg, 2e-7, trials=80, bracket_db=(3.0, 6.0), seed=2)

    def test_invalid_bracket_order(self):
        with pytest.raises(BracketError):
            min_snr_for_mse(cheap_cfg(), 2e-7, trials=10, bracket_db=(0.0, -10.0), seed=0)


class TestSweepM:
    def test_single_element_reduces_to_min_snr(self):
        cfg = cheap_cfg()
        table = sweep_m(cfg, [8], 2e-7, trials=100, tol_db=0.25,
                        bracket_db=(-30.0, 0.0), seed=51)
        assert len(table) == 1 and table[0][0] == 8
        direct = min_snr_for_mse(cfg, 2e-7, trials=100, tol_db=0.25,
                                 bracket_db=(-30.0, 0.0), seed=derive_seed(51, 0))
        assert table[0][1].gamma_star_db == direct.gamma_star_db

    def test_required_snr_drops_with_more_antennas(self):
        cfg = cheap_cfg()
        table = sweep_m(cfg, [4, 16], 2e-7, trials=200, tol_db=0.2,
                        bracket_db=(-30.0, 0.0), seed=52)
        stars = {m: res.gamma_star_db for m, res in table}
        assert stars[16] < stars[4]


class TestRuntimeScaling:
    def test_wall_time_linear_in_antennas_and_users(self):
        # doubling M or K should not much more than double run_mse wall time;
        # sized so the linear math work dominates fixed per-call overheads
        def best_time(cfg):
            run_mse(cfg, 100, 3)  # warm phasor cache and allocator
            times = []
            for _ in range(5):
                t0 = time.perf_counter()
                run_mse(cfg, 100, 3)
                times.append(time.perf_counter() - t0)
            return min(times)

        base = SystemConfig(m=40, k=5, n=1000, l=2, gamma=0.1, delta_max=DMAX, alpha=1.5)
        t_base = best_time(base)
        t_double_m = best_time(replace(base, m=80))
        t_double_k = best_time(replace(base, k=10))
        assert t_double_m / t_base <= 2.3
        assert t_double_k / t_base <= 2.3
