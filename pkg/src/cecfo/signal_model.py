"""Uplink pilot-frame synthesis for multiuser CFO estimation.

Each of K single-antenna users transmits a unit-modulus pilot; user k
occupies the tone ``2*pi*(k-1)/K`` rad/channel-use, offset by its own
carrier frequency offset omega_k.  After L-tap frequency-selective
Rayleigh fading (with a cyclic pre-extension of the pilot, so that the
convolution is in steady state over the observed N samples), antenna m
of the base station receives

    r_m[t] = sqrt(p_u) * sum_q H_mq * exp(j*(2*pi*(q-1)/K + omega_q)*t) + n_m[t]

where ``H_mq = sum_l h_mq[l] * exp(-j*2*pi*(q-1)*l/K)`` is the effective
channel gain at user q's pilot tone, ``h_mq[l] ~ CN(0, sigma2[q, l])``,
and ``n_m[t] ~ CN(0, noise_var)``.  Frames are synthesized directly from
this steady-state form; the tap-domain convolution is kept only as a
test oracle (see tests).

Reproducibility: every trial derives its generator from a master seed
via :func:`trial_rng`; trial streams are independent and can be
regenerated in any order, which is what makes parallel Monte-Carlo
schedules give bit-identical results.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Little-endian binary frame format: header of three int64 (M, K, N),
# payload of M*N row-major complex samples as interleaved re/im float64.
_FRAME_MAGIC_DTYPE = np.dtype("<i8")
_FRAME_PAYLOAD_DTYPE = np.dtype("<c16")


@dataclass(frozen=True)
class SystemConfig:
    """Scenario scalars for one simulated uplink pilot slot."""

    m: int                   # base-station antennas
    k: int                   # users
    n: int                   # pilot length in channel uses
    l: int                   # channel taps
    gamma: float             # transmit SNR p_u / noise_var (linear)
    delta_max: float         # max |CFO| in rad/channel-use
    alpha: float             # periodogram grid exponent (> 1)
    noise_var: float = 1.0   # receiver noise variance sigma^2
    n_c: int | None = None   # coherence length, if known

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.n < self.k:
            raise ValueError(f"n must be >= k, got n={self.n}, k={self.k}")
        if self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if not 0 < self.delta_max < np.pi / self.k:
            # user bands [2*pi*(k-1)/K +- delta_max] must not overlap
            raise ValueError(
                f"delta_max must lie in (0, pi/k), got {self.delta_max} with k={self.k}"
            )
        if self.n_c is not None and self.n > self.n_c:
            raise ValueError(f"n must be <= n_c, got n={self.n}, n_c={self.n_c}")

    @property
    def pilot_power(self) -> float:
        """Per-user pilot power p_u = gamma * noise_var.

        noise_var = 0 synthesizes noiseless frames; the pilot power is then
        gamma itself (the sigma^2 = 1 convention with the noise removed).
        """
        return self.gamma * self.noise_var if self.noise_var > 0 else self.gamma


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-user per-tap variances; ``beta[q]`` is the total power of user q."""

    sigma2: np.ndarray               # (K, L) tap variances
    beta: np.ndarray = field(init=False)  # (K,) row sums of sigma2

    def __post_init__(self):
        sigma2 = np.asarray(self.sigma2, dtype=float)
        if sigma2.ndim != 2:
            raise ValueError(f"sigma2 must be 2-D (users x taps), got shape {sigma2.shape}")
        if np.any(sigma2 < 0):
            raise ValueError("tap variances must be >= 0")
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "beta", sigma2.sum(axis=1))

    @classmethod
    def uniform(cls, num_users: int, num_taps: int) -> "PowerDelayProfile":
        """Equal-power profile sigma2 = 1/L for every user and tap."""
        return cls(np.full((num_users, num_taps), 1.0 / num_taps))

    @property
    def num_users(self) -> int:
        return self.sigma2.shape[0]

    @property
    def num_taps(self) -> int:
        return self.sigma2.shape[1]


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the multipath channel: raw taps and effective tone gains."""

    taps: np.ndarray        # (M, K, L) complex gains h_mk[l]
    effective: np.ndarray   # (M, K) gains H_mq at each user's pilot tone


@dataclass(frozen=True)
class CfoVector:
    """True per-user carrier frequency offsets, rad/channel-use."""

    omega: np.ndarray  # (K,)


@dataclass(frozen=True)
class FrameTruth:
    """Ground truth retained with a synthesized frame, for evaluation only."""

    cfos: CfoVector
    channel: ChannelRealization
    noise: np.ndarray  # (M, N) raw noise samples


@dataclass(frozen=True)
class ReceivedFrame:
    """M x N received baseband samples plus synthesis metadata."""

    samples: np.ndarray          # (M, N) complex
    num_users: int               # K, fixes the pilot tone spacing 2*pi/K
    pilot_power: float = 1.0     # p_u used at synthesis
    noise_var: float = 1.0       # sigma^2 used at synthesis
    truth: FrameTruth | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D (antennas x time), got shape {samples.shape}")
        if not np.all(np.isfinite(samples.view(float))):
            raise ValueError("frame samples must be finite")
        samples.setflags(write=False)  # frames are immutable after construction
        object.__setattr__(self, "samples", samples)

    @property
    def num_antennas(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]


# ---------------------------------------------------------------------------
# random sources
# ---------------------------------------------------------------------------

def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Generator for one Monte-Carlo trial.

    Splitting rule (fixed, documented): the stream for trial ``i`` is
    ``default_rng(SeedSequence(master_seed, spawn_key=(i,)))``.  Streams for
    distinct trials are independent, and any trial can be regenerated
    without drawing the others.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def derive_seed(master_seed: int, *path: int) -> int:
    """Derive an independent master seed for a sub-experiment.

    Uses the same SeedSequence spawn-key mechanism as :func:`trial_rng`, one
    level up: sweeps hand each point a derived master so their trial streams
    never collide.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(0x5EED, *path))
    return int(ss.generate_state(1, np.uint64)[0])


def complex_awgn(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    """Circular-symmetric complex Gaussian CN(0, var).

    Total variance ``var`` splits equally between independent real and
    imaginary parts (var/2 each).
    """
    parts = rng.standard_normal((2,) + tuple(shape))
    return np.sqrt(var / 2.0) * (parts[0] + 1j * parts[1])


# ---------------------------------------------------------------------------
# pilots, channel, CFOs, frames
# ---------------------------------------------------------------------------

def gen_pilot(k: int, num_users: int, length: int) -> np.ndarray:
    """Unit-modulus pilot of user k (1-based): exp(j*2*pi*(k-1)*t/K).

    Every sample has modulus exactly 1, so the transmit PAPR is 0 dB.
    """
    if not 1 <= k <= num_users:
        raise ValueError(f"user index k must be in 1..{num_users}, got {k}")
    if length < 1:
        raise ValueError(f"pilot length must be >= 1, got {length}")
    t = np.arange(length)
    return np.exp(1j * (TWO_PI * (k - 1) / num_users) * t)


def sample_channel(
    pdp: PowerDelayProfile,
    num_antennas: int,
    num_users: int,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw independent CN(0, sigma2[q, l]) taps and their effective tone gains."""
    if num_users != pdp.num_users:
        raise ValueError(
            f"num_users={num_users} does not match the profile's {pdp.num_users}"
        )
    taps = complex_awgn(rng, (num_antennas, num_users, pdp.num_taps), 1.0)
    taps = taps * np.sqrt(pdp.sigma2)[None, :, :]
    # H_mq = sum_l h_mq[l] * exp(-j*2*pi*(q-1)*l/K): channel response at tone q
    q = np.arange(num_users)[:, None]
    l = np.arange(pdp.num_taps)[None, :]
    twiddle = np.exp(-1j * (TWO_PI / num_users) * q * l)
    effective = np.einsum("mql,ql->mq", taps, twiddle)
    return ChannelRealization(taps=taps, effective=effective)


def draw_cfos(delta_max: float, num_users: int, rng: np.random.Generator) -> CfoVector:
    """Per-user CFOs drawn i.i.d. uniform on [-delta_max, delta_max]."""
    if not delta_max > 0:
        raise ValueError(f"delta_max must be > 0, got {delta_max}")
    return CfoVector(omega=rng.uniform(-delta_max, delta_max, num_users))


def synth_frame(
    cfg: SystemConfig,
    channel: ChannelRealization,
    cfos: CfoVector,
    rng: np.random.Generator,
    keep_truth: bool = True,
) -> ReceivedFrame:
    """Synthesize one received frame from the steady-state closed form.

    Noise is drawn from this call's ``rng`` with variance ``cfg.noise_var``;
    the signal part is scaled by sqrt(p_u) with p_u = gamma * noise_var.
    With ``keep_truth`` the frame retains (cfos, channel, noise) so the
    periodogram terms can be decomposed exactly afterwards.
    """
    if channel.effective.shape != (cfg.m, cfg.k):
        raise ValueError(
            f"channel shape {channel.effective.shape} does not match config ({cfg.m}, {cfg.k})"
        )
    if cfos.omega.shape != (cfg.k,):
        raise ValueError(
            f"cfo vector length {cfos.omega.shape[0]} does not match config k={cfg.k}"
        )
    t = np.arange(cfg.n)
    tones = TWO_PI * np.arange(cfg.k) / cfg.k + cfos.omega   # received tone of each user
    carriers = np.exp(1j * tones[:, None] * t[None, :])      # (K, N)
    signal = channel.effective @ carriers                    # (M, N)
    if cfg.noise_var > 0:
        noise = complex_awgn(rng, (cfg.m, cfg.n), cfg.noise_var)
    else:
        noise = np.zeros((cfg.m, cfg.n), dtype=complex)
    samples = np.sqrt(cfg.pilot_power) * signal + noise
    truth = FrameTruth(cfos=cfos, channel=channel, noise=noise) if keep_truth else None
    return ReceivedFrame(
        samples=samples,
        num_users=cfg.k,
        pilot_power=cfg.pilot_power,
        noise_var=cfg.noise_var,
        truth=truth,
    )


def make_trial_frame(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    master_seed: int,
    trial: int,
    keep_truth: bool = True,
) -> ReceivedFrame:
    """Draw channel, CFOs and noise for one trial and synthesize the frame.

    Draw order within the trial stream is fixed (channel taps, then CFOs,
    then noise) so every consumer of trial ``i`` sees identical realizations.
    """
    rng = trial_rng(master_seed, trial)
    channel = sample_channel(pdp, cfg.m, cfg.k, rng)
    cfos = draw_cfos(cfg.delta_max, cfg.k, rng)
    return synth_frame(cfg, channel, cfos, rng, keep_truth=keep_truth)


# ---------------------------------------------------------------------------
# binary frame dump (debugging interface)
# ---------------------------------------------------------------------------

def dump_frame(frame: ReceivedFrame, path) -> None:
    """Write a frame to a little-endian binary file.

    Layout: header M, K, N as int64, then the M x N samples row-major as
    interleaved re/im float64.  Ground truth is not serialized.
    """
    header = np.array(
        [frame.num_antennas, frame.num_users, frame.num_samples],
        dtype=_FRAME_MAGIC_DTYPE,
    )
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(frame.samples, dtype=_FRAME_PAYLOAD_DTYPE).tobytes())


def load_frame(path) -> ReceivedFrame:
    """Read a frame written by :func:`dump_frame` (truth is not recoverable)."""
    with open(path, "rb") as fh:
        raw = fh.read(3 * 8)
        if len(raw) != 24:
            raise ValueError(f"truncated frame header in {path}")
        m, k, n = struct.unpack("<3q", raw)
        payload = np.frombuffer(fh.read(), dtype=_FRAME_PAYLOAD_DTYPE)
    if payload.size != m * n:
        raise ValueError(f"frame payload in {path} has {payload.size} samples, expected {m * n}")
    return ReceivedFrame(samples=payload.reshape(m, n).copy(), num_users=k)
