#!/usr/bin/env python3
"""Optimum-launch SNR and MI versus distance under the cubic noise model."""

from shapelab import make_cqam_greedy, make_square_qam, stretch
from shapelab.linksim import LinkModel, reach_curve, reach_to_csv

# toy calibration, normalized power units
model = LinkModel(ase_per_span=1e-3, eta0=1e-3, eta_moment_slope=2e-4)

for name, c in (("CQAM", stretch(make_cqam_greedy(8), 1.38)), ("QAM", make_square_qam(3))):
    print(name)
    print(reach_to_csv(reach_curve(c, model, range(10, 61, 10), lam_step=0.25)))
