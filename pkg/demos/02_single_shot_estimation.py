"""One-shot CFO estimation from a single received frame.

The search grid around each user's pilot tone has spacing 2*pi/N**alpha
(much finer than the 1/N periodogram resolution), half-width one grid step
past the largest possible offset.  The estimate is the grid argmax of the
periodogram averaged across antennas.
"""

import numpy as np

from cecfo import PowerDelayProfile, SystemConfig, build_grid, estimate_all, make_trial_frame

cfg = SystemConfig(m=80, k=10, n=1000, l=5, gamma=10 ** (-1.0),
                   delta_max=np.pi / 2500, alpha=1.5)
pdp = PowerDelayProfile.uniform(cfg.k, cfg.l)
grid = build_grid(cfg.n, cfg.alpha, cfg.delta_max)
print(f"grid: {grid.size} offsets, spacing {grid.spacing:.4e} rad/use, "
      f"half-width {grid.t0 * grid.spacing:.4e}")

frame = make_trial_frame(cfg, pdp, master_seed=7, trial=0)
results = estimate_all(frame, grid)
truth = frame.truth.cfos.omega

print(f"\n{'user':>4} {'true':>12} {'estimate':>12} {'error/step':>11}")
for res in results:
    err_steps = (res.estimate - truth[res.user - 1]) / grid.spacing
    print(f"{res.user:>4} {truth[res.user - 1]:>+12.4e} {res.estimate:>+12.4e} {err_steps:>+11.2f}")

rmse = np.sqrt(np.mean([(r.estimate - truth[r.user - 1]) ** 2 for r in results]))
print(f"\nsingle-frame RMS error: {rmse:.3e} rad/use  ({rmse / grid.spacing:.2f} grid steps)")

# periodogram profile of one user, normalized to its peak
res = results[2]
profile = res.values / res.values.max()
print(f"\nuser 3 periodogram across the grid (1.0 marks the argmax):")
for j, (off, val) in enumerate(zip(grid.offsets, profile)):
    bar = "#" * int(round(50 * val))
    marker = " <- estimate" if j == res.argmax_index else ""
    print(f"  {off:+.3e}  {bar}{marker}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.figure(figsize=(7, 4))
    plt.plot(grid.offsets, res.values, "o-", label="averaged periodogram")
    plt.axvline(truth[res.user - 1], color="k", ls="--", label="true offset")
    plt.axvline(res.estimate, color="r", ls=":", label="estimate")
    plt.xlabel("offset (rad/channel use)")
    plt.ylabel("power")
    plt.legend()
    plt.tight_layout()
    plt.savefig("/tmp/periodogram_profile.png", dpi=120)
    print("\nwrote /tmp/periodogram_profile.png")
except ImportError:
    pass
