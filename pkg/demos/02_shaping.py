#!/usr/bin/env python3
"""Maxwell-Boltzmann shaping of 64-QAM and of the stretched greedy CQAM."""

import numpy as np

from shapelab import capacity, cm_mi_quad, lambda_for_entropy, make_cqam_greedy, make_square_qam
from shapelab.shaping import optimize_stretch, rate_gap_db

qam = make_square_qam(3)
prof = lambda_for_entropy(qam, 5.45)
print(f"64-QAM at H=5.45 bits: lambda={prof.lam:.4f}")

for snr in (6, 10, 14, 18):
    u = cm_mi_quad(qam, snr)
    s = cm_mi_quad(prof.constellation, snr)
    print(f"{snr:2d} dB  C={capacity(snr):.3f}  uniform={u:.3f}  shaped={s:.3f}")

# joint search over radial stretch and MB parameter (takes ~20 s)
alpha, best = optimize_stretch(make_cqam_greedy(8))
print(f"\ngreedy CQAM: alpha={alpha:.2f} lambda={best.lam:.4f} H={best.entropy_bits:.3f}")
for snr in np.arange(8, 12.5, 1.0):
    gap = rate_gap_db(cm_mi_quad(best.constellation, snr), snr)
    print(f"  {snr:4.1f} dB  gap to capacity {gap:.3f} dB")
