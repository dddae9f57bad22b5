"""Monte-Carlo studies: MSE vs grid exponent, and minimum SNR vs antennas.

Trials are independent work units keyed by (master seed, trial index); every
routine here regenerates trial draws through the same splitting rule, so a
sweep sees exactly the per-trial realizations that a standalone
:func:`run_mse` with the same seed would see (common random numbers), and
results are bit-identical no matter how trials are scheduled: per-trial
squared errors land in a trials-indexed array and are reduced in index
order.

The minimum-SNR search exploits that only the signal part of a frame scales
with the transmit power: one pass projects each trial's signal and noise
separately onto the periodogram grid, after which the periodogram at any
SNR is `pu*|S|^2 + 2*sqrt(pu)*Re(S W*) + |W|^2` per antenna, making each
bisection evaluation essentially free and exactly CRN-consistent across the
whole gamma axis.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .estimator import FrequencyGrid, build_grid, periodogram_values, phasor_table
from .signal_model import (
    PowerDelayProfile,
    SystemConfig,
    complex_awgn,
    derive_seed,
    draw_cfos,
    sample_channel,
    trial_rng,
)


class InfeasibleTargetError(ValueError):
    """Target MSE is at or below the grid's noiseless quantization floor."""


class BracketError(ValueError):
    """Measured MSE at the bracket endpoints does not straddle the target."""


@dataclass(frozen=True)
class MseEstimate:
    """Monte-Carlo MSE pooled over users and trials, with a 95% half-width."""

    mse: float
    trials: int
    seed: int
    half_width: float
    per_user: np.ndarray  # (K,) per-user MSE breakdown


@dataclass(frozen=True)
class SnrSearchResult:
    """Outcome of the bisection for the minimum SNR meeting a target MSE."""

    gamma_star_db: float
    bracket: tuple[float, float]   # final (low, high) in dB
    evaluations: list              # [(gamma_db, MseEstimate), ...] in evaluation order


def quantization_floor(grid: FrequencyGrid) -> float:
    """Noiseless MSE floor spacing^2/12 of the nearest-grid-point quantizer."""
    return grid.spacing**2 / 12.0


# ---------------------------------------------------------------------------
# MSE at a fixed operating point
# ---------------------------------------------------------------------------

def run_mse(
    cfg: SystemConfig,
    trials: int,
    seed: int,
    workers: int = 1,
    pdp: PowerDelayProfile | None = None,
) -> MseEstimate:
    """Pooled CFO-estimation MSE over `trials` independent frames.

    Per trial: draw channel, CFOs and noise, synthesize the frame, estimate
    every user on the grid and accumulate the squared errors of all K users.
    The power delay profile defaults to equal-power 1/L taps.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    grid = build_grid(cfg.n, cfg.alpha, cfg.delta_max)
    if pdp is None:
        pdp = PowerDelayProfile.uniform(cfg.k, cfg.l)
    sq = _map_trial_ranges(_mse_range, (cfg, pdp, grid, seed), trials, workers)
    return _pool_mse(sq, trials, seed)


def sweep_alpha(
    cfg: SystemConfig,
    alphas,
    trials: int,
    seed: int,
    workers: int = 1,
    pdp: PowerDelayProfile | None = None,
) -> list[tuple[float, MseEstimate]]:
    """Rerun the MSE study for each grid exponent with identical trial draws.

    Trial draws depend only on (seed, trial index), never on alpha, so the
    curves differ only through the search grid.
    """
    for a in alphas:
        if not a > 1:
            raise ValueError(f"every alpha must be > 1, got {a}")
    return [
        (float(a), run_mse(replace(cfg, alpha=float(a)), trials, seed, workers, pdp))
        for a in alphas
    ]


# ---------------------------------------------------------------------------
# minimum SNR for a target MSE
# ---------------------------------------------------------------------------

def min_snr_for_mse(
    cfg: SystemConfig,
    target_mse: float,
    trials: int = 2000,
    tol_db: float = 0.1,
    bracket_db: tuple[float, float] = (-25.0, 0.0),
    seed: int = 0,
    workers: int = 1,
    pdp: PowerDelayProfile | None = None,
) -> SnrSearchResult:
    """Bisect the transmit SNR (dB) for the smallest value meeting `target_mse`.

    MSE is treated as monotone non-increasing in gamma; all evaluations share
    one trial ensemble (common random numbers), so the result is the crossing
    of a fixed empirical MSE(gamma) curve.  Returns the feasible upper end of
    the final bracket, whose measured MSE is <= target by construction.
    """
    grid = build_grid(cfg.n, cfg.alpha, cfg.delta_max)
    floor = quantization_floor(grid)
    if target_mse <= floor:
        raise InfeasibleTargetError(
            f"target MSE {target_mse:.3e} is at or below the noiseless quantization "
            f"floor {floor:.3e} of the grid (n={cfg.n}, alpha={cfg.alpha})"
        )
    if pdp is None:
        pdp = PowerDelayProfile.uniform(cfg.k, cfg.l)
    scan = _scan_gamma_axis(cfg, pdp, grid, trials, seed, workers)

    lo, hi = float(bracket_db[0]), float(bracket_db[1])
    if not lo < hi:
        raise BracketError(f"bracket must satisfy low < high, got {bracket_db}")
    evaluations = []

    def measure(gamma_db: float) -> MseEstimate:
        est = scan.mse_at(gamma_db)
        evaluations.append((gamma_db, est))
        return est

    mse_lo = measure(lo)
    mse_hi = measure(hi)
    if mse_lo.mse <= target_mse or mse_hi.mse > target_mse:
        raise BracketError(
            f"bracket [{lo}, {hi}] dB does not straddle target {target_mse:.3e}: "
            f"MSE(low)={mse_lo.mse:.3e}, MSE(high)={mse_hi.mse:.3e}"
        )
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if measure(mid).mse <= target_mse:
            hi = mid
        else:
            lo = mid
    return SnrSearchResult(gamma_star_db=hi, bracket=(lo, hi), evaluations=evaluations)


def sweep_m(
    cfg: SystemConfig,
    m_list,
    target_mse: float,
    trials: int = 2000,
    tol_db: float = 0.1,
    bracket_db: tuple[float, float] = (-25.0, 0.0),
    seed: int = 0,
    workers: int = 1,
    pdp: PowerDelayProfile | None = None,
) -> list[tuple[int, SnrSearchResult]]:
    """Minimum-SNR search per antenna count, each with an independent sub-seed."""
    out = []
    for idx, m in enumerate(m_list):
        seed_m = derive_seed(seed, idx)
        result = min_snr_for_mse(
            replace(cfg, m=int(m)), target_mse, trials, tol_db, bracket_db, seed_m, workers, pdp
        )
        out.append((int(m), result))
    return out


# ---------------------------------------------------------------------------
# internals
# ---------------------------------------------------------------------------

def _pool_mse(sq: np.ndarray, trials: int, seed: int) -> MseEstimate:
    trial_means = sq.mean(axis=1)
    mse = float(sq.mean())
    if trials >= 2:
        half = float(1.96 * trial_means.std(ddof=1) / np.sqrt(trials))
    else:
        half = 0.0
    return MseEstimate(
        mse=mse, trials=trials, seed=seed, half_width=half, per_user=sq.mean(axis=0)
    )


def _chunk_trials(m: int, n: int, cols: int) -> int:
    # keep the stacked frame and projection buffers around ~64 MB each
    per_trial = 16 * m * max(n, cols)
    return max(1, min(128, int(64e6 // per_trial)))


def _draw_trial_parts(cfg, pdp, seed, trial):
    """Channel/CFO/noise draws of one trial, in the frame synthesis order."""
    rng = trial_rng(seed, trial)
    channel = sample_channel(pdp, cfg.m, cfg.k, rng)
    cfos = draw_cfos(cfg.delta_max, cfg.k, rng)
    if cfg.noise_var > 0:
        noise = complex_awgn(rng, (cfg.m, cfg.n), cfg.noise_var)
    else:
        noise = np.zeros((cfg.m, cfg.n), dtype=complex)
    return channel, cfos, noise


def _mse_range(cfg, pdp, grid, seed, lo, hi):
    """Squared errors of trials [lo, hi): synthesize, estimate, compare."""
    count = hi - lo
    sq = np.empty((count, cfg.k))
    chunk = _chunk_trials(cfg.m, cfg.n, cfg.k * grid.size)
    t = np.arange(cfg.n)
    tone = 2.0 * np.pi * np.arange(cfg.k) / cfg.k
    sqrt_pu = np.sqrt(cfg.pilot_power)
    for start in range(lo, hi, chunk):
        stop = min(start + chunk, hi)
        b = stop - start
        frames = np.empty((b, cfg.m, cfg.n), dtype=complex)
        omegas = np.empty((b, cfg.k))
        for j, trial in enumerate(range(start, stop)):
            channel, cfos, noise = _draw_trial_parts(cfg, pdp, seed, trial)
            carriers = np.exp(1j * (tone + cfos.omega)[:, None] * t[None, :])
            frames[j] = sqrt_pu * (channel.effective @ carriers) + noise
            omegas[j] = cfos.omega
        values = periodogram_values(frames, cfg.k, grid)       # (b, K, P)
        idx = values.argmax(axis=2)
        est = grid.offsets[idx]
        sq[start - lo : stop - lo] = (est - omegas) ** 2
    return sq


class _GammaScan:
    """Per-trial signal/noise periodogram projections, reusable for any SNR."""

    def __init__(self, sig_pow, cross, noise_pow, omegas, grid, noise_var, seed):
        self.sig_pow = sig_pow        # (trials, K, P): sum_m |S|^2
        self.cross = cross            # (trials, K, P): sum_m Re(S conj(W))
        self.noise_pow = noise_pow    # (trials, K, P): sum_m |W|^2
        self.omegas = omegas          # (trials, K) true CFOs
        self.grid = grid
        self.noise_var = noise_var
        self.seed = seed

    def mse_at(self, gamma_db: float) -> MseEstimate:
        pu = self.noise_var * 10.0 ** (gamma_db / 10.0)
        phi = pu * self.sig_pow + (2.0 * np.sqrt(pu)) * self.cross + self.noise_pow
        idx = phi.argmax(axis=2)
        est = self.grid.offsets[idx]
        sq = (est - self.omegas) ** 2
        return _pool_mse(sq, sq.shape[0], self.seed)


def _scan_range(cfg, pdp, grid, seed, lo, hi):
    """Signal/noise projections of trials [lo, hi) onto the grid."""
    count = hi - lo
    p = grid.size
    sig_pow = np.empty((count, cfg.k, p))
    cross = np.empty((count, cfg.k, p))
    noise_pow = np.empty((count, cfg.k, p))
    omegas = np.empty((count, cfg.k))
    table = phasor_table(cfg.n, cfg.k, grid)
    chunk = _chunk_trials(cfg.m, cfg.n, cfg.k * p)
    t = np.arange(cfg.n)
    tone = 2.0 * np.pi * np.arange(cfg.k) / cfg.k
    for start in range(lo, hi, chunk):
        stop = min(start + chunk, hi)
        b = stop - start
        sig = np.empty((b, cfg.m, cfg.n), dtype=complex)
        noi = np.empty((b, cfg.m, cfg.n), dtype=complex)
        for j, trial in enumerate(range(start, stop)):
            channel, cfos, noise = _draw_trial_parts(cfg, pdp, seed, trial)
            carriers = np.exp(1j * (tone + cfos.omega)[:, None] * t[None, :])
            sig[j] = channel.effective @ carriers
            noi[j] = noise
            omegas[start - lo + j] = cfos.omega
        s_proj = sig.reshape(b * cfg.m, cfg.n) @ table
        w_proj = noi.reshape(b * cfg.m, cfg.n) @ table
        shape = (b, cfg.m, cfg.k, p)
        sl = slice(start - lo, stop - lo)
        sig_pow[sl] = (s_proj.real**2 + s_proj.imag**2).reshape(shape).sum(axis=1)
        cross[sl] = (s_proj.real * w_proj.real + s_proj.imag * w_proj.imag).reshape(shape).sum(axis=1)
        noise_pow[sl] = (w_proj.real**2 + w_proj.imag**2).reshape(shape).sum(axis=1)
    return sig_pow, cross, noise_pow, omegas


def _scan_gamma_axis(cfg, pdp, grid, trials, seed, workers) -> _GammaScan:
    parts = _map_trial_ranges(_scan_range, (cfg, pdp, grid, seed), trials, workers, multi=True)
    sig_pow, cross, noise_pow, omegas = parts
    return _GammaScan(sig_pow, cross, noise_pow, omegas, grid, cfg.noise_var, seed)


def _worker_call(fn, args, lo, hi, blas_threads):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - dependency is declared
        return fn(*args, lo, hi)
    with threadpool_limits(limits=blas_threads):
        return fn(*args, lo, hi)


def _map_trial_ranges(fn, args, trials, workers, multi=False):
    """Run fn over contiguous trial ranges, reassembling rows in trial order."""
    workers = max(1, int(workers))
    if workers == 1 or trials < 2 * workers:
        return fn(*args, 0, trials)
    bounds = np.linspace(0, trials, workers + 1, dtype=int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    blas_threads = max(1, (os.cpu_count() or 1) // workers)
    with ProcessPoolExecutor(max_workers=len(ranges)) as pool:
        futures = [
            pool.submit(_worker_call, fn, args, lo, hi, blas_threads) for lo, hi in ranges
        ]
        blocks = [f.result() for f in futures]
    if multi:
        return tuple(np.concatenate(parts, axis=0) for parts in zip(*blocks))
    return np.concatenate(blocks, axis=0)
