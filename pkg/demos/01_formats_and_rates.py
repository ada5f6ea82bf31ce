#!/usr/bin/env python3
"""Build the 64-point formats and compare their rates at a few SNRs."""

from shapelab import (bcm_mi, capacity, cm_mi_quad, gray_label_star, make_cqam_greedy,
                      make_cqam_hybrid, make_cqam_star, make_cqam_two_dist, make_square_qam,
                      measure, scm_mi)

formats = {
    "64-QAM": make_square_qam(3),
    "star": gray_label_star(make_cqam_star(8)),
    "2-dist": gray_label_star(make_cqam_two_dist(8)),
    "hybrid": gray_label_star(make_cqam_hybrid(8)),
    "greedy": gray_label_star(make_cqam_greedy(8)),
}

# figure of merit: |X| d_min^2 / sum |x|^2
for name, c in formats.items():
    r = measure(c)
    print(f"{name:8s} fom={r.fom:.4f}  mu4={r.mu4:.3f}")

print("\nrates at 10 dB (capacity %.4f)" % capacity(10))
for name, c in formats.items():
    print(f"{name:8s} CM={cm_mi_quad(c, 10):.4f}  S-CM={scm_mi(c, 10):.4f}  B-CM={bcm_mi(c, 10):.4f}")

# the star/2-dist pair swaps order between CM and S-CM
