"""Acceptance criteria 1-11, one test each; each prints a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, where
the lines are repeated in the terminal summary.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from shapelab.constellation import (gray_label_star, make_cqam_greedy, make_cqam_hybrid,
                                    make_cqam_star, make_cqam_two_dist, make_square_qam, rotate)
from shapelab.linksim import (LinkModel, effective_eta, optimal_launch,
                              optimal_launch_numeric, reach_curve)
from shapelab.pas import (ccdm_decode, ccdm_encode, ccdm_input_bits, kl_bits, min_code_rate,
                          plan_rates, quantize_composition, split_for)
from shapelab.constellation import FigureReport, fundamental_set
from shapelab.rates import capacity, cm_mi_mc, cm_mi_quad, rate_point, snr_for_rate
from shapelab.shaping import (golden_section_max, lambda_for_entropy, mb_weights, optimize_stretch,
                              rate_gap_db)

SUITE_SNRS = (0, 5, 10, 15, 20)
_cache = {}


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def suite_formats():
    if "suite" not in _cache:
        _cache["suite"] = {
            "64-QAM-gray": make_square_qam(3),
            "star": gray_label_star(make_cqam_star(8)),
            "2-dist": gray_label_star(make_cqam_two_dist(8)),
            "hybrid": gray_label_star(make_cqam_hybrid(8)),
            "greedy": gray_label_star(make_cqam_greedy(8)),
        }
    return _cache["suite"]


def shaped_cqam():
    if "cqam" not in _cache:
        _cache["cqam"] = optimize_stretch(make_cqam_greedy(8))
    return _cache["cqam"]


def test_criterion_01_capacity_anchor():
    v = capacity(10.0)
    err = abs(v - math.log2(11))
    report(1, err <= 1e-9 and round(v, 5) == 3.45943, f"capacity(10 dB) = {v:.12f}, |err| = {err:.1e}")


def test_criterion_02_shaped_cqam_gap():
    t0 = time.time()
    alpha, prof = shaped_cqam()
    c = prof.constellation
    snrs = np.arange(8.0, 12.0001, 0.25)
    gaps = [rate_gap_db(cm_mi_quad(c, s, 48), s) for s in snrs]
    worst = max(gaps)
    # cross-check the closed-form gap against the root-finding definition at the worst point
    s_w = snrs[int(np.argmax(gaps))]
    target = cm_mi_quad(c, s_w, 48)
    g_root = snr_for_rate(c, target, lambda con, s: cm_mi_quad(con, s, 48), tol_db=1e-7) \
        - 10 * math.log10(2 ** target - 1)
    dt = time.time() - t0
    ok = worst <= 0.12 and abs(g_root - worst) < 1e-5 and dt < 120
    report(2, ok, f"alpha={alpha:.2f} lambda={prof.lam:.4f} H={prof.entropy_bits:.3f} "
                  f"max gap over 8-12 dB = {worst:.4f} dB at {s_w:.2f} dB (<= 0.12), {dt:.0f} s")


def test_criterion_03_shaping_gain():
    t0 = time.time()
    qam = make_square_qam(3)
    need = lambda c, order: snr_for_rate(c, 4.0, lambda con, s: cm_mi_quad(con, s, order), tol_db=1e-7)
    s_u = need(qam, 48)
    lam, neg, _ = golden_section_max(lambda l: -need(mb_weights(qam, l).constellation, 32), 0.0, 4.0, 1e-3)
    s_s = need(mb_weights(qam, lam).constellation, 48)
    g = s_u - s_s
    dt = time.time() - t0
    report(3, 0 < g < 1.53 and dt < 60, f"gain at CM = 4.0 bits: {g:.4f} dB (lambda={lam:.3f}), {dt:.0f} s")


def test_criterion_04_entropy_anchor():
    prof = lambda_for_entropy(make_square_qam(3), 5.45)
    err = abs(prof.entropy_bits - 5.45)
    report(4, err <= 1e-6, f"lambda={prof.lam:.10f} H={prof.entropy_bits:.12f} |err|={err:.1e}")


def test_criterion_05_rate_ordering():
    tol, worst, bad = 2e-3, -math.inf, []
    for name, c in suite_formats().items():
        for s in SUITE_SNRS:
            p = rate_point(c, s, ("cm", "scm", "bcm"))
            top = min(c.entropy, capacity(s))
            viol = max(-p.bcm_bits, p.bcm_bits - p.scm_bits, p.scm_bits - p.cm_bits, p.cm_bits - top)
            worst = max(worst, viol)
            if viol > tol:
                bad.append(f"{name}@{s}")
    report(5, not bad, f"25 points, worst ordering violation {worst:.2e} bits (tol 2e-3) {bad or ''}")


def test_criterion_06_quad_vs_mc():
    worst, bad = 0.0, []
    for k, (name, c) in enumerate(suite_formats().items()):
        for s in SUITE_SNRS:
            q = cm_mi_quad(c, s, 48)
            v, se = cm_mi_mc(c, s, 10 ** 6, seed=1000 + 10 * k + s)
            z = abs(v - q) / se
            worst = max(worst, z)
            if z > 3:
                bad.append(f"{name}@{s}")
    report(6, not bad, f"25 points, worst |quad - MC| = {worst:.2f} stderr (limit 3) {bad or ''}")


def test_criterion_07_pas_algebra():
    ok = min_code_rate(2) == 2 / 3 and min_code_rate(1) == 0.5
    ok &= plan_rates(2, 2, 0.95, 0).R_C == 2 / 3 and plan_rates(8, 1, 0.9, 0).R_C == 0.5
    rng = np.random.default_rng(0)
    worst_res, worst_trip, n = 0.0, 0.0, 0
    while n < 1000:
        q = int(rng.choice([2, 4, 8, 16]))
        R_AM, R_DM, r = float(rng.integers(1, 5)), float(rng.uniform(0.05, 1)), float(rng.uniform(0, 0.95))
        R_C = R_AM / (1 + R_AM) * (1 + r / (1 - r) * R_DM)
        if not R_C < 1:
            continue
        p = plan_rates(q, R_AM, R_DM, r)
        back = plan_rates(q, R_AM, R_DM, split_for(q, R_AM, R_DM, p.R_C).r)
        worst_res = max(worst_res, abs(p.residual), abs(back.residual))
        worst_trip = max(worst_trip, abs(back.R_C - p.R_C))
        n += 1
    ok &= worst_res <= 1e-12 and worst_trip <= 1e-12
    report(7, bool(ok), f"bounds 2/3 and 1/2 exact; 1000 tuples max residual {worst_res:.1e}, "
                        f"round-trip max |dR_C| {worst_trip:.1e}")


def test_criterion_08_matcher():
    t0 = time.time()
    c = mb_weights(make_cqam_greedy(8), 1.0).constellation
    b = fundamental_set(c)
    target = c.probs[b] / c.probs[b].sum()
    comps = [quantize_composition(target, n) for n in (48, 64, 96)]
    rng = np.random.default_rng(8)
    ok_trip = ok_comp = True
    for i in range(10 ** 4):
        comp = comps[i % 3]
        bits = rng.integers(0, 2, ccdm_input_bits(comp))
        sym = ccdm_encode(bits, comp)
        ok_comp &= tuple(np.bincount(sym, minlength=8)) == comp.counts
        ok_trip &= bool(np.array_equal(ccdm_decode(sym, comp), bits))
    kls = []
    for n in (100, 1000, 10000):
        comp = quantize_composition(target, n)
        sym = ccdm_encode(rng.integers(0, 2, ccdm_input_bits(comp)), comp)
        kls.append(kl_bits(np.bincount(sym, minlength=8) / n, target))
    mono = kls[0] >= kls[1] >= kls[2]
    dt = time.time() - t0
    report(8, ok_trip and ok_comp and mono and dt < 60,
           f"1e4 payloads round-trip={ok_trip} exact composition={ok_comp}; "
           f"KL(n=100,1e3,1e4) = {kls[0]:.2e}, {kls[1]:.2e}, {kls[2]:.2e}; {dt:.0f} s")


def test_criterion_09_link_model():
    rng = np.random.default_rng(9)
    worst_rel = worst_foc = 0.0
    for _ in range(100):
        eta0 = 10 ** rng.uniform(-5, 0)
        m = LinkModel(spans=int(rng.integers(1, 100)), ase_per_span=10 ** rng.uniform(-4, 1),
                      eta0=eta0, eta_moment_slope=rng.uniform(0, 0.5) * eta0)
        rep = FigureReport(0, 1, 0, rng.uniform(1, 3), 0)
        p, _ = optimal_launch(m, rep)
        pn, _ = optimal_launch_numeric(m, rep)
        worst_rel = max(worst_rel, abs(pn - p) / p)
        worst_foc = max(worst_foc, abs(effective_eta(m, rep) * p ** 3 - m.ase_total / 2) / m.ase_total)
    base = LinkModel(ase_per_span=1e-3, eta0=1e-3, eta_moment_slope=2e-4)
    rep = FigureReport(0, 1, 0, 1.5, 0)
    snr = [optimal_launch(base.with_spans(n), rep)[1] for n in range(1, 101)]
    dec = bool(np.all(np.diff(snr) < 0))
    report(9, worst_rel <= 1e-6 and worst_foc <= 1e-9 and dec,
           f"closed vs numeric p_opt max rel {worst_rel:.1e}; FOC max rel {worst_foc:.1e}; "
           f"snr_opt strictly decreasing over 1-100 spans={dec}")


def test_criterion_10_reach_curves():
    # lab measurements are out of scope; only the qualitative surrogate check runs
    _, prof = shaped_cqam()
    stretched = prof.constellation.with_probs(np.full(64, 1 / 64))
    model = LinkModel(ase_per_span=1e-3, eta0=1e-3, eta_moment_slope=2e-4)
    spans = range(10, 61, 10)
    rf = lambda con, s: cm_mi_quad(con, s, 32)
    a = reach_curve(stretched, model, spans, lam_step=0.05, rate_fn=rf)
    b = reach_curve(make_square_qam(3), model, spans, lam_step=0.05, rate_fn=rf)
    diff = max(abs(x.snr_opt_db - y.snr_opt_db) for x, y in zip(a, b))
    report(10, diff <= 0.1, f"lab results not reproducible at desk scale (informational); "
                            f"surrogate reach curves CQAM vs QAM max |dSNR_opt| = {diff:.4f} dB "
                            f"over 10-60 spans (lambda_opt {a[0].lambda_opt:g}/{b[0].lambda_opt:g})")


def test_criterion_11_rotation_invariance():
    c = make_cqam_greedy(8)
    ref = cm_mi_quad(c, 10.0)
    thetas = np.random.default_rng(11).uniform(0, 2 * np.pi, 20)
    worst = max(abs(cm_mi_quad(rotate(c, t), 10.0) - ref) for t in thetas)
    report(11, worst <= 1e-9, f"20 rotations, max |dCM| = {worst:.1e} bits")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
