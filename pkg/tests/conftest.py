"""Shared test helpers: direct-summation oracles and small scenario factories."""

import numpy as np
import pytest

from cecfo.signal_model import TWO_PI, PowerDelayProfile, SystemConfig, make_trial_frame

DMAX = np.pi / 2500  # reference maximum CFO used throughout the test suite


def direct_periodogram(samples, num_users, k, omega):
    """Two-level direct evaluation of the spatially averaged periodogram.

    Per-antenna inner sums are formed independently (fresh phasors each time,
    plain np.sum) and the antenna partials are combined in index order; this
    is the reference against which the fused matrix-product path is checked.
    """
    m, n = samples.shape
    t = np.arange(n)
    freq = TWO_PI * (k - 1) / num_users + omega
    total = 0.0
    for row in samples:
        inner = np.sum(row * np.exp(-1j * freq * t))
        total += abs(inner) ** 2
    return total / (m * n)


def small_cfg(rng, max_m=8, max_k=8, max_n=256, noise_var=1.0, gamma=1.0):
    """Random small scenario with n a multiple of k (pilot design regime)."""
    m = int(rng.integers(1, max_m + 1))
    k = int(rng.integers(1, max_k + 1))
    n = k * int(rng.integers(max(2, 16 // k), max_n // k + 1))
    l = int(rng.integers(1, 5))
    return SystemConfig(
        m=m, k=k, n=n, l=l, gamma=gamma, delta_max=DMAX, alpha=1.5, noise_var=noise_var
    )


def small_frame(rng, seed=None, **kwargs):
    cfg = small_cfg(rng, **kwargs)
    pdp = PowerDelayProfile.uniform(cfg.k, cfg.l)
    if seed is None:
        seed = int(rng.integers(0, 2**31))
    return cfg, make_trial_frame(cfg, pdp, seed, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(0xACCE55)
