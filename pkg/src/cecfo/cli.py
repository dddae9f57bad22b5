"""Command-line front end for the estimation experiments.

Subcommands
-----------
estimate          synthesize one frame and print per-user CFO estimates
mse-alpha         MSE-vs-grid-exponent curves, one per pilot length
min-snr-vs-m      minimum SNR meeting a target MSE, per antenna count
validate-moments  analytic-vs-empirical periodogram term moments

Configuration is a flat ``key = value`` text file with ``#`` comments.
Keys (defaults in parentheses follow the reference scenario): ``m`` (80),
``k`` (10), ``n`` (1000), ``l`` (5), ``n_c`` (1000), ``snr_db`` (-10),
``delta_max`` (pi/2500), ``alpha`` (1.5), ``pdp`` ("uniform" or a comma
list of per-tap variances), ``trials`` (2000), ``seed`` (1).  The keys
``m k n l snr_db delta_max alpha`` are required in the file; the rest are
optional.  ``--seed`` and ``--trials`` override the file.

Results are CSV files written atomically (write-temp-then-rename), each
accompanied by a JSON manifest recording the resolved config, master seed,
tool version, timestamp and output paths; rerunning with the recorded
config and seed reproduces the CSVs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 infeasible/unbracketed
search, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import datetime
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .estimator import build_grid, estimate_all
from .experiments import (
    BracketError,
    InfeasibleTargetError,
    sweep_alpha,
    sweep_m,
)
from .moments import validate_moments, write_moment_report
from .signal_model import PowerDelayProfile, SystemConfig, derive_seed, make_trial_frame

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

_INT_KEYS = ("m", "k", "n", "l", "n_c", "trials", "seed")
_FLOAT_KEYS = ("snr_db", "delta_max", "alpha")
_ALL_KEYS = ("m", "k", "n", "l", "n_c", "snr_db", "delta_max", "alpha", "pdp", "trials", "seed")
_REQUIRED_KEYS = ("m", "k", "n", "l", "snr_db", "delta_max", "alpha")
_OPTIONAL_DEFAULTS = {"n_c": "1000", "pdp": "uniform", "trials": "2000", "seed": "1"}


class ConfigError(ValueError):
    """Problem with the configuration file; message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved scenario: system config, PDP and run bookkeeping."""

    cfg: SystemConfig
    pdp: PowerDelayProfile
    snr_db: float
    trials: int
    seed: int
    pdp_spec: str  # "uniform" or the comma list, kept for round-tripping


# ---------------------------------------------------------------------------
# config file handling
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a raw string map."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"malformed config line {lineno}: {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown config key '{key}' (line {lineno})")
        if key in raw:
            raise ConfigError(f"duplicate config key '{key}' (line {lineno})")
        if not value:
            raise ConfigError(f"empty value for config key '{key}' (line {lineno})")
        raw[key] = value
    return raw


def resolve_config(raw: dict[str, str]) -> RunConfig:
    """Type-check the raw map, apply defaults and build the scenario objects."""
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing config key '{key}'")
    merged = {**_OPTIONAL_DEFAULTS, **raw}

    def parse(key, conv):
        try:
            return conv(merged[key])
        except ValueError as exc:
            raise ConfigError(f"config key '{key}': {exc}") from exc

    values = {k: parse(k, int) for k in _INT_KEYS}
    values.update({k: parse(k, float) for k in _FLOAT_KEYS})
    pdp_spec = merged["pdp"]
    try:
        cfg = SystemConfig(
            m=values["m"],
            k=values["k"],
            n=values["n"],
            l=values["l"],
            gamma=10.0 ** (values["snr_db"] / 10.0),
            delta_max=values["delta_max"],
            alpha=values["alpha"],
            noise_var=1.0,
            n_c=values["n_c"],
        )
        pdp = _parse_pdp(pdp_spec, cfg.k, cfg.l)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        cfg=cfg,
        pdp=pdp,
        snr_db=values["snr_db"],
        trials=values["trials"],
        seed=values["seed"],
        pdp_spec=pdp_spec,
    )


def _parse_pdp(spec: str, num_users: int, num_taps: int) -> PowerDelayProfile:
    if spec == "uniform":
        return PowerDelayProfile.uniform(num_users, num_taps)
    try:
        taps = [float(v) for v in spec.split(",")]
    except ValueError as exc:
        raise ConfigError(f"config key 'pdp': {exc}") from exc
    if len(taps) != num_taps:
        raise ConfigError(f"config key 'pdp': expected {num_taps} tap variances, got {len(taps)}")
    return PowerDelayProfile(np.tile(np.asarray(taps), (num_users, 1)))


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return resolve_config(parse_config_text(text))


def format_config(run: RunConfig) -> str:
    """Canonical serialization; parsing it back yields an identical scenario."""
    values = config_as_dict(run)
    lines = ["# cecfo scenario configuration"]
    lines += [f"{key} = {values[key]}" for key in _ALL_KEYS]
    return "\n".join(lines) + "\n"


def config_as_dict(run: RunConfig) -> dict[str, str]:
    cfg = run.cfg
    return {
        "m": str(cfg.m),
        "k": str(cfg.k),
        "n": str(cfg.n),
        "l": str(cfg.l),
        "n_c": str(cfg.n_c),
        "snr_db": repr(run.snr_db),
        "delta_max": repr(cfg.delta_max),
        "alpha": repr(cfg.alpha),
        "pdp": run.pdp_spec,
        "trials": str(run.trials),
        "seed": str(run.seed),
    }


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _atomic_write_text(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cecfo-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    _atomic_write_text(path, buf.getvalue())


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_manifest(out_dir, name, command, run, seed, trials, parameters, outputs) -> str:
    manifest = {
        "tool": "cecfo",
        "version": __version__,
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": command,
        "master_seed": seed,
        "trials": trials,
        "config": config_as_dict(run),
        "parameters": parameters,
        "outputs": outputs,
    }
    path = os.path.join(out_dir, name)
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{flag}: {exc}") from exc


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{flag}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    run = load_config(args.config)
    seed = args.seed if args.seed is not None else run.seed
    cfg = run.cfg
    grid = build_grid(cfg.n, cfg.alpha, cfg.delta_max)
    frame = make_trial_frame(cfg, run.pdp, seed, 0)
    results = estimate_all(frame, grid)
    truth = frame.truth.cfos.omega
    print(f"{'user':>4}  {'true_cfo':>15}  {'estimate':>15}  {'sq_error':>12}")
    for res in results:
        err = (res.estimate - truth[res.user - 1]) ** 2
        print(
            f"{res.user:>4}  {truth[res.user - 1]:>+15.8e}  "
            f"{res.estimate:>+15.8e}  {err:>12.4e}"
        )
    return EXIT_OK


def cmd_mse_alpha(args) -> int:
    run = load_config(args.config)
    seed = args.seed if args.seed is not None else run.seed
    trials = args.trials if args.trials is not None else run.trials
    alphas = _parse_float_list(args.alphas, "--alphas")
    lengths = _parse_int_list(args.pilot_lengths, "--pilot-lengths")
    os.makedirs(args.out, exist_ok=True)

    rows, per_user_rows = [], []
    for idx, n in enumerate(lengths):
        cfg_n = replace(run.cfg, n=n)
        seed_n = derive_seed(seed, idx)
        for alpha, est in sweep_alpha(cfg_n, alphas, trials, seed_n, args.threads, run.pdp):
            rows.append([n, alpha, est.mse, est.half_width, trials, seed_n])
            for user, mse_u in enumerate(est.per_user, start=1):
                per_user_rows.append([n, alpha, user, float(mse_u)])

    curve_path = os.path.join(args.out, "mse_alpha.csv")
    per_user_path = os.path.join(args.out, "mse_alpha_per_user.csv")
    _write_csv(curve_path, ["n", "alpha", "mse", "ci_half_width", "trials", "seed"], rows)
    _write_csv(per_user_path, ["n", "alpha", "user", "mse"], per_user_rows)
    _write_manifest(
        args.out,
        "mse_alpha_manifest.json",
        "mse-alpha",
        run,
        seed,
        trials,
        {"alphas": alphas, "pilot_lengths": lengths, "threads": args.threads},
        [os.path.basename(curve_path), os.path.basename(per_user_path)],
    )
    print(f"wrote {curve_path}")
    print(f"wrote {per_user_path}")
    return EXIT_OK


def cmd_min_snr_vs_m(args) -> int:
    run = load_config(args.config)
    seed = args.seed if args.seed is not None else run.seed
    trials = args.trials if args.trials is not None else run.trials
    m_list = _parse_int_list(args.m_list, "--m-list")
    lengths = _parse_int_list(args.pilot_lengths, "--pilot-lengths")
    bracket = _parse_float_list(args.bracket_db, "--bracket-db")
    if len(bracket) != 2:
        raise ConfigError("--bracket-db: expected 'low,high' in dB")
    os.makedirs(args.out, exist_ok=True)

    rows, eval_rows = [], []
    for idx, n in enumerate(lengths):
        cfg_n = replace(run.cfg, n=n)
        seed_n = derive_seed(seed, idx)
        for m, res in sweep_m(
            cfg_n,
            m_list,
            args.target_mse,
            trials,
            args.tol_db,
            (bracket[0], bracket[1]),
            seed_n,
            args.threads,
            run.pdp,
        ):
            rows.append(
                [n, m, res.gamma_star_db, res.bracket[0], res.bracket[1],
                 args.target_mse, trials, seed_n]
            )
            for gamma_db, est in res.evaluations:
                eval_rows.append([n, m, gamma_db, est.mse, est.half_width])

    curve_path = os.path.join(args.out, "min_snr_vs_m.csv")
    evals_path = os.path.join(args.out, "min_snr_vs_m_evals.csv")
    _write_csv(
        curve_path,
        ["n", "m", "gamma_star_db", "bracket_low_db", "bracket_high_db",
         "target_mse", "trials", "seed"],
        rows,
    )
    _write_csv(evals_path, ["n", "m", "gamma_db", "mse", "ci_half_width"], eval_rows)
    _write_manifest(
        args.out,
        "min_snr_vs_m_manifest.json",
        "min-snr-vs-m",
        run,
        seed,
        trials,
        {
            "m_list": m_list,
            "pilot_lengths": lengths,
            "target_mse": args.target_mse,
            "tol_db": args.tol_db,
            "bracket_db": bracket,
            "threads": args.threads,
        },
        [os.path.basename(curve_path), os.path.basename(evals_path)],
    )
    print(f"wrote {curve_path}")
    print(f"wrote {evals_path}")
    return EXIT_OK


def cmd_validate_moments(args) -> int:
    run = load_config(args.config)
    seed = args.seed if args.seed is not None else run.seed
    trials = args.trials if args.trials is not None else run.trials
    os.makedirs(args.out, exist_ok=True)
    rows = validate_moments(run.cfg, run.pdp, trials, seed)

    buf = io.StringIO()
    write_moment_report(rows, buf)
    report_path = os.path.join(args.out, "moment_validation.csv")
    _atomic_write_text(report_path, buf.getvalue())
    _write_manifest(
        args.out,
        "moment_validation_manifest.json",
        "validate-moments",
        run,
        seed,
        trials,
        {},
        [os.path.basename(report_path)],
    )
    print(f"{'term':>4} {'statistic':>9} {'analytic':>13} {'empirical':>13} {'rel_dev':>10}")
    for row in rows:
        rel = f"{row.rel_dev:+.3%}" if not np.isnan(row.rel_dev) else "   --  "
        print(f"{row.term:>4} {row.statistic:>9} {row.analytic:>13.6g} {row.empirical:>13.6g} {rel:>10}")
    print(f"wrote {report_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cecfo",
        description="CFO estimation experiments with constant-envelope pilots",
    )
    parser.add_argument("--version", action="version", version=f"cecfo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="scenario config file (key = value)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials (overrides config)")
        p.add_argument("--threads", type=int, default=1, help="parallel trial workers")
        if needs_out:
            p.add_argument("--out", default="results", help="output directory for CSVs and manifest")

    p = sub.add_parser("estimate", help="estimate one synthesized frame, print the per-user table")
    common(p, needs_out=False)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("mse-alpha", help="MSE vs grid exponent, one curve per pilot length")
    common(p)
    p.add_argument("--alphas", default="1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9,2.0")
    p.add_argument("--pilot-lengths", default="800,1000")
    p.set_defaults(handler=cmd_mse_alpha)

    p = sub.add_parser("min-snr-vs-m", help="minimum SNR meeting a target MSE, per antenna count")
    common(p)
    p.add_argument("--m-list", default="40,80,160,320")
    p.add_argument("--pilot-lengths", default="800,1000")
    p.add_argument("--target-mse", type=float, default=1e-8)
    p.add_argument("--tol-db", type=float, default=0.1)
    p.add_argument("--bracket-db", default="-25,0")
    p.set_defaults(handler=cmd_min_snr_vs_m)

    p = sub.add_parser("validate-moments", help="analytic vs empirical periodogram term moments")
    common(p)
    p.set_defaults(handler=cmd_validate_moments)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleTargetError, BracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
