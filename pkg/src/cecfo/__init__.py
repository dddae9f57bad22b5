"""CFO estimation for massive MU-MIMO uplinks with constant-envelope pilots.

Library layout:

- :mod:`cecfo.signal_model` -- pilots, fading channel, CFO draws, frame synthesis
- :mod:`cecfo.estimator` -- frequency grid and spatially averaged periodogram argmax
- :mod:`cecfo.moments` -- periodogram term decomposition and its analytic moments
- :mod:`cecfo.experiments` -- Monte-Carlo MSE studies and the minimum-SNR search
- :mod:`cecfo.cli` -- command-line front end over the experiments
"""

__version__ = "0.1.0"

from .estimator import (
    FrequencyGrid,
    PeriodogramResult,
    build_grid,
    estimate_all,
    estimate_cfo,
    periodogram_at,
)
from .experiments import (
    BracketError,
    InfeasibleTargetError,
    MseEstimate,
    SnrSearchResult,
    min_snr_for_mse,
    quantization_floor,
    run_mse,
    sweep_alpha,
    sweep_m,
)
from .moments import (
    AnalyticMoments,
    TermDecomposition,
    analytic_moments,
    decompose_terms,
    dirichlet_kernel,
    validate_moments,
)
from .signal_model import (
    CfoVector,
    ChannelRealization,
    PowerDelayProfile,
    ReceivedFrame,
    SystemConfig,
    draw_cfos,
    dump_frame,
    gen_pilot,
    load_frame,
    make_trial_frame,
    sample_channel,
    synth_frame,
    trial_rng,
)

__all__ = [
    "AnalyticMoments",
    "BracketError",
    "CfoVector",
    "ChannelRealization",
    "FrequencyGrid",
    "InfeasibleTargetError",
    "MseEstimate",
    "PeriodogramResult",
    "PowerDelayProfile",
    "ReceivedFrame",
    "SnrSearchResult",
    "SystemConfig",
    "TermDecomposition",
    "analytic_moments",
    "build_grid",
    "decompose_terms",
    "dirichlet_kernel",
    "draw_cfos",
    "dump_frame",
    "estimate_all",
    "estimate_cfo",
    "gen_pilot",
    "load_frame",
    "make_trial_frame",
    "min_snr_for_mse",
    "periodogram_at",
    "quantization_floor",
    "run_mse",
    "sample_channel",
    "sweep_alpha",
    "sweep_m",
    "synth_frame",
    "trial_rng",
    "validate_moments",
]
