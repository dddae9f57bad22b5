"""Minimum transmit SNR for a target MSE, against the antenna count.

Spatial averaging across antennas suppresses the periodogram noise, so a
larger array meets the same MSE at lower pilot power.  The search shares
one trial ensemble across the whole SNR axis (the signal projection just
rescales), making the bisection cheap and its MSE(gamma) curve a fixed
function of the seed.

A full-size run is `cecfo min-snr-vs-m --config configs/reference.cfg`;
this demo uses a reduced trial count to finish in a couple of minutes.
"""

import numpy as np

from cecfo import SystemConfig, sweep_m

cfg = SystemConfig(m=40, k=10, n=1000, l=5, gamma=1.0, delta_max=np.pi / 2500, alpha=1.5)
target = 1e-8

print(f"target MSE {target:.0e}, pilot length {cfg.n}, {cfg.k} users\n")
print(f"{'antennas':>8} {'min SNR (dB)':>13} {'evaluations':>12}")
rows = sweep_m(cfg, [40, 80, 160], target, trials=400, tol_db=0.2,
               bracket_db=(-32.0, 0.0), seed=99)
for m, res in rows:
    print(f"{m:>8} {res.gamma_star_db:>13.2f} {len(res.evaluations):>12}")

stars = {m: res.gamma_star_db for m, res in rows}
print(f"\nSNR saved per antenna doubling: "
      f"{stars[80] - stars[40]:+.2f} dB (40->80), {stars[160] - stars[80]:+.2f} dB (80->160)")
