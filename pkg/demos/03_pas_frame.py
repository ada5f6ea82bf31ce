#!/usr/bin/env python3
"""One PAS frame on shaped 64-CQAM: plan, match, map, send, recover."""

import numpy as np

from shapelab import make_cqam_greedy
from shapelab.constellation import fundamental_set
from shapelab.linksim import awgn_transmit
from shapelab.pas import pas_deframe, pas_demap_hard, pas_frame, plan_rates, quantize_composition
from shapelab.shaping import mb_weights

c = mb_weights(make_cqam_greedy(8), 1.0).constellation
plan = plan_rates(q=8, R_AM=1, R_DM=0.9, r=0.2)
print("nominal plan:", plan)

b = fundamental_set(c)
comp = quantize_composition(c.probs[b] / c.probs[b].sum(), 1000)
print("amplitude composition:", comp.counts)

rng = np.random.default_rng(0)
payload = rng.integers(0, 2, 3000).astype(np.uint8)
frame = pas_frame(payload, plan, c, comp, seed=1)
print("effective plan:", frame.plan)
print("padding bits:", frame.meta["padding_bits"])

# noiseless recovery, then a noisy pass with hard decisions
assert np.array_equal(pas_deframe(frame.points, c, comp, frame.meta), payload)
y = awgn_transmit(frame.points, 20.0, seed=2) / np.sqrt(100.0)
a_hat, s_hat = pas_demap_hard(y, c)
print("symbol errors at 20 dB:", int(np.sum((a_hat != frame.amplitudes) | (s_hat != frame.regions))))
