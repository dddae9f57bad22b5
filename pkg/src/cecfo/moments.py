"""Statistical structure of the averaged periodogram at one grid offset.

For user k at candidate offset w, the normalized periodogram splits exactly
into three terms,

    phi_k(w) / p_u = T1 + T2 + T3,

where T1 is the averaged noise energy, T2 the noise-signal cross term and
T3 the signal term.  Writing ``b_qk(w) = 2*pi*(q-k)/K + omega_q - w`` for
the frequency of user q relative to the probed tone, the pieces are

    T1 = 1/(M*p_u) * sum_m |w_m|^2,        w_m = 1/sqrt(N) * sum_t n_m[t]*e^{-j(tone_k + w)t}
    T2 = 2/(M*sqrt(p_u)) * Re sum_m w_m^* S_m
    T3 = 1/M * sum_m |S_m|^2,              S_m = sum_q H_mq * A(b_qk(w))

with ``A`` the scaled Dirichlet kernel below.  Conditioned on the CFOs and
the offset (randomness over channel and noise only), the closed-form means
and variances of the three terms are available and serve as statistical
oracles for the Monte-Carlo harness; :func:`validate_moments` compares them
against empirical estimates and reports deviations rather than hiding them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .signal_model import (
    TWO_PI,
    CfoVector,
    PowerDelayProfile,
    ReceivedFrame,
    SystemConfig,
    complex_awgn,
    sample_channel,
    trial_rng,
)

# |sin(x/2)| below this means x is within ~2e-9 of a multiple of 2*pi, far
# closer than any grid spacing in use; switch to the removable-singularity
# limit there.
_SINGULARITY_EPS = 1e-9


def dirichlet_kernel(omega, n: int):
    """Scaled Dirichlet kernel A(w) = 1/sqrt(N) * sum_t exp(j*w*t), t = 0..N-1.

    Closed form (1/sqrt(N)) * sin(N*w/2)/sin(w/2) * exp(+j*(N-1)*w/2), with
    the removable singularities at multiples of 2*pi evaluated by their
    limit, so A(0) = sqrt(N) exactly.  Accepts scalars or arrays.  The phase
    sign is fixed by the defining sum (the geometric series identity), which
    is what makes the three-term split of the periodogram exact.
    """
    omega_arr = np.asarray(omega, dtype=float)
    # A is 2*pi-periodic; reducing the argument first keeps sin(n*w/2)
    # accurate arbitrarily close to every singularity, and leaves small
    # arguments untouched bit for bit
    reduced = omega_arr - TWO_PI * np.rint(omega_arr / TWO_PI)
    half = 0.5 * reduced
    sin_half = np.sin(half)
    singular = np.abs(sin_half) < _SINGULARITY_EPS
    safe_sin = np.where(singular, 1.0, sin_half)
    scaled = np.sin(n * half) / safe_sin / np.sqrt(n)
    # the reduced argument is near 0 when singular, where the limit is +sqrt(n)
    scaled = np.where(singular, np.sqrt(n), scaled)
    value = scaled * np.exp(1j * (n - 1) * half)
    if np.isscalar(omega) or omega_arr.ndim == 0:
        return complex(value)
    return value


def kernel_power_ratio(x, n: int):
    """sin^2(N*x/2) / sin^2(x/2), with the limit N^2 at multiples of 2*pi."""
    x_arr = np.asarray(x, dtype=float)
    reduced = x_arr - TWO_PI * np.rint(x_arr / TWO_PI)  # 2*pi-periodic, see above
    sin_half = np.sin(0.5 * reduced)
    singular = np.abs(sin_half) < _SINGULARITY_EPS
    safe = np.where(singular, 1.0, sin_half)
    ratio = np.sin(0.5 * n * reduced) ** 2 / safe**2
    ratio = np.where(singular, float(n) ** 2, ratio)
    if np.isscalar(x) or x_arr.ndim == 0:
        return float(ratio)
    return ratio


def relative_tones(num_users: int, k: int, cfos: CfoVector, offset: float) -> np.ndarray:
    """Frequencies b_qk of all users relative to user k's probed tone."""
    q = np.arange(1, num_users + 1)
    return TWO_PI * (q - k) / num_users + cfos.omega - offset


@dataclass(frozen=True)
class TermDecomposition:
    """Exact three-term split of phi_k(w)/p_u for one frame."""

    t1: float  # averaged noise energy (>= 0)
    t2: float  # noise-signal cross term
    t3: float  # signal term (>= 0)

    @property
    def total(self) -> float:
        return self.t1 + self.t2 + self.t3


def decompose_terms(frame: ReceivedFrame, k: int, offset: float) -> TermDecomposition:
    """Compute T1, T2, T3 for user k at one offset from a frame's ground truth.

    Requires the frame to carry its synthesis truth (channel, CFOs, raw
    noise); their sum reproduces periodogram_at(frame, k, offset)/p_u.
    """
    if frame.truth is None:
        raise ValueError("frame carries no ground truth; synthesize with keep_truth=True")
    if not 1 <= k <= frame.num_users:
        raise ValueError(f"user index k must be in 1..{frame.num_users}, got {k}")
    m, n = frame.samples.shape
    pu = frame.pilot_power
    freq = TWO_PI * (k - 1) / frame.num_users + offset
    phasors = np.exp(-1j * freq * np.arange(n))
    w = (frame.truth.noise @ phasors) / np.sqrt(n)                      # (M,)
    kernels = dirichlet_kernel(relative_tones(frame.num_users, k, frame.truth.cfos, offset), n)
    s = frame.truth.channel.effective @ kernels                          # (M,)
    t1 = float(np.mean(w.real**2 + w.imag**2) / pu)
    t2 = float(2.0 * np.mean((np.conj(w) * s).real) / np.sqrt(pu))
    t3 = float(np.mean(s.real**2 + s.imag**2))
    return TermDecomposition(t1=t1, t2=t2, t3=t3)


@dataclass(frozen=True)
class AnalyticMoments:
    """Closed-form means and variances of T1, T2, T3 (channel and noise random)."""

    mean_t1: float
    var_t1: float
    mean_t2: float
    var_t2: float
    mean_t3: float
    var_t3: float


def analytic_moments(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    cfos: CfoVector,
    k: int,
    offset: float,
) -> AnalyticMoments:
    """Evaluate the closed-form term moments for fixed CFOs and offset."""
    tones = relative_tones(cfg.k, k, cfos, offset)
    ratios = kernel_power_ratio(tones, cfg.n)
    weighted = pdp.beta * ratios                             # beta_q * sin-ratio, per user
    # var(T3) as a double sum over (q1, q2) with the 1/(M*N^2) factor
    var_t3 = float(np.sum(np.outer(weighted, weighted))) / (cfg.m * cfg.n**2)
    return AnalyticMoments(
        mean_t1=1.0 / cfg.gamma,
        var_t1=1.0 / (cfg.m * cfg.gamma**2),
        mean_t2=0.0,
        var_t2=float(2.0 / (cfg.m * cfg.n * cfg.gamma) * weighted.sum()),
        mean_t3=float(weighted.sum() / cfg.n),
        var_t3=var_t3,
    )


@dataclass(frozen=True)
class MomentStat:
    """One analytic-vs-empirical comparison row of the validation report."""

    term: str         # "T1" | "T2" | "T3"
    statistic: str    # "mean" | "var"
    analytic: float
    empirical: float
    rel_dev: float    # (empirical - analytic)/|analytic|; nan when analytic == 0
    std_err: float    # standard error of the empirical estimate


def validate_moments(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    trials: int,
    seed: int,
    k: int = 1,
    offset: float = 0.0,
    cfos: CfoVector | None = None,
) -> list[MomentStat]:
    """Monte-Carlo check of the analytic term moments.

    Holds the CFOs and the probed offset fixed and draws ``trials``
    independent (channel, noise) realizations; reports empirical mean and
    variance of each term next to the closed forms.  The noise enters the
    terms only through the projections w_m, which are exactly CN(0, sigma^2),
    so those are drawn directly instead of N-sample noise frames.
    """
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    if cfos is None:
        cfos = draw_validation_cfos(cfg, seed)
    kernels = dirichlet_kernel(relative_tones(cfg.k, k, cfos, offset), cfg.n)
    pu = cfg.pilot_power
    sqrt_pu = np.sqrt(pu)

    t1 = np.empty(trials)
    t2 = np.empty(trials)
    t3 = np.empty(trials)
    for i in range(trials):
        rng = trial_rng(seed, i)
        channel = sample_channel(pdp, cfg.m, cfg.k, rng)
        w = complex_awgn(rng, (cfg.m,), cfg.noise_var)
        s = channel.effective @ kernels
        t1[i] = np.mean(w.real**2 + w.imag**2) / pu
        t2[i] = 2.0 * np.mean((np.conj(w) * s).real) / sqrt_pu
        t3[i] = np.mean(s.real**2 + s.imag**2)

    ana = analytic_moments(cfg, pdp, cfos, k, offset)
    rows = []
    for name, samples, mean_ref, var_ref in (
        ("T1", t1, ana.mean_t1, ana.var_t1),
        ("T2", t2, ana.mean_t2, ana.var_t2),
        ("T3", t3, ana.mean_t3, ana.var_t3),
    ):
        rows.append(_stat_row(name, "mean", mean_ref, samples, trials))
        rows.append(_stat_row(name, "var", var_ref, samples, trials, variance=True))
    return rows


def draw_validation_cfos(cfg: SystemConfig, seed: int) -> CfoVector:
    """Fixed CFO draw for a validation run (own sub-stream of the master seed)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xCF0,)))
    return CfoVector(omega=rng.uniform(-cfg.delta_max, cfg.delta_max, cfg.k))


def _stat_row(term, statistic, analytic, samples, trials, variance=False):
    centered = samples - samples.mean()
    m2 = float(np.mean(centered**2))
    if variance:
        empirical = float(np.var(samples, ddof=1))
        m4 = float(np.mean(centered**4))
        # delta-method standard error of the sample variance
        std_err = float(np.sqrt(max(m4 - m2**2, 0.0) / trials))
    else:
        empirical = float(samples.mean())
        std_err = float(np.sqrt(m2 / (trials - 1)))
    rel_dev = (empirical - analytic) / abs(analytic) if analytic != 0.0 else float("nan")
    return MomentStat(
        term=term,
        statistic=statistic,
        analytic=float(analytic),
        empirical=empirical,
        rel_dev=rel_dev,
        std_err=std_err,
    )


def write_moment_report(rows: list[MomentStat], fh) -> None:
    """Emit the validation report as CSV (rel_dev left blank where undefined)."""
    writer = csv.writer(fh)
    writer.writerow(["term", "statistic", "analytic", "empirical", "rel_dev", "std_err"])
    for row in rows:
        rel = "" if np.isnan(row.rel_dev) else repr(row.rel_dev)
        writer.writerow([row.term, row.statistic, repr(row.analytic), repr(row.empirical), rel, repr(row.std_err)])
