import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapelab.constellation import (Constellation, gray_label_star, make_cqam_greedy,
                                    make_cqam_star, make_cqam_two_dist, make_square_qam, rotate)
from shapelab.rates import (RateCurve, RateError, bcm_mi, capacity, cm_mi_mc, cm_mi_quad,
                            rate_curve, scm_mi, snr_gap, snr_for_rate)
from shapelab.shaping import mb_weights

QAM64 = make_square_qam(3)
QPSK = make_square_qam(1)

# uniform 64-QAM CM = 2 x (8-PAM mutual information), the latter from adaptive
# 1-D integration (scipy.integrate.quad, 1e-13 tolerances) of the real channel
QAM64_CM_ORACLE = {
    0: 0.9917721237655679,
    5: 1.9926136229376987,
    10: 3.2685723564539932,
    15: 4.681432889304963,
    20: 5.801461797039369,
}


def test_capacity_anchors():
    assert capacity(0) == 1.0
    assert abs(capacity(10) - math.log2(11)) < 1e-12
    assert capacity(-math.inf) == 0.0


@pytest.mark.parametrize("snr", sorted(QAM64_CM_ORACLE))
def test_cm_matches_integration_oracle(snr):
    assert cm_mi_quad(QAM64, snr) == pytest.approx(QAM64_CM_ORACLE[snr], abs=1e-6)


def test_limits():
    assert cm_mi_quad(QAM64, -40) < 1e-3
    assert 6 - cm_mi_quad(QAM64, 40) < 1e-6


def test_mc_matches_quad_18db():
    v, se = cm_mi_mc(QAM64, 18.0, 10 ** 6, seed=0)
    assert abs(v - cm_mi_quad(QAM64, 18.0)) <= 3 * se


def test_mc_low_snr_and_qpsk():
    v, se = cm_mi_mc(QAM64, -40, 10 ** 5, seed=1)
    assert abs(v) <= 3 * se + 1e-12
    v, se = cm_mi_mc(QPSK, 5, 10 ** 5, seed=2)
    assert abs(v - cm_mi_quad(QPSK, 5)) <= 3 * se


def test_mc_deterministic():
    assert cm_mi_mc(QAM64, 7, 50_000, seed=3) == cm_mi_mc(QAM64, 7, 50_000, seed=3)


def test_scm_single_symbol_equals_cm():
    c = Constellation(QAM64.points, QAM64.probs, q=4, symbolic=np.arange(64))
    assert scm_mi(c, 8) == pytest.approx(cm_mi_quad(c, 8), abs=1e-12)


def test_bcm_qpsk_equals_cm():
    for s in (-3, 5, 12):
        assert bcm_mi(QPSK, s) == pytest.approx(cm_mi_quad(QPSK, s), abs=1e-9)


def test_bcm_below_cm_at_low_snr():
    assert cm_mi_quad(QAM64, 0) - bcm_mi(QAM64, 0) > 0.1


def test_star_vs_two_dist_reversal():
    star, td = make_cqam_star(8), make_cqam_two_dist(8)
    assert cm_mi_quad(td, 10) > cm_mi_quad(star, 10)
    assert scm_mi(td, 10) < scm_mi(star, 10)


def test_missing_labels():
    c = Constellation(QPSK.points, QPSK.probs, q=4)
    with pytest.raises(RateError, match="binary"):
        bcm_mi(c, 5)
    with pytest.raises(RateError, match="symbolic"):
        scm_mi(c, 5)


def test_rotation_invariance():
    c = make_cqam_greedy(8)
    ref = cm_mi_quad(c, 10)
    for th in np.random.default_rng(0).uniform(0, 2 * np.pi, 5):
        assert abs(cm_mi_quad(rotate(c, th), 10) - ref) < 1e-9


def test_gap_for_gaussian_like_target():
    # uniform 64-QAM at a low target sits close to the Gaussian curve
    g = snr_gap(QAM64, 1.0)
    assert 0 < g < 0.1


def test_snr_for_rate_inverts():
    s = snr_for_rate(QAM64, 4.0)
    assert cm_mi_quad(QAM64, s) == pytest.approx(4.0, abs=1e-7)
    with pytest.raises(RateError):
        snr_for_rate(QAM64, 6.5)


def test_curve_csv_round_trip():
    curve = rate_curve(gray_label_star(make_cqam_star(8)), [0, 10], ("cm", "scm", "bcm"))
    back = RateCurve.from_csv(curve.to_csv())
    for a, b in zip(curve.points, back.points):
        assert (a.cm_bits, a.scm_bits, a.bcm_bits) == (b.cm_bits, b.scm_bits, b.bcm_bits)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 25), st.floats(0, 3))
def test_rate_ordering_and_bounds(snr, lam):
    c = mb_weights(make_square_qam(2), lam).constellation
    cm, sc, bc = cm_mi_quad(c, snr, 24), scm_mi(c, snr, order=24), bcm_mi(c, snr, order=24)
    tol = 2e-3
    assert -tol <= bc <= sc + tol and sc <= cm + tol
    assert cm <= min(c.entropy, capacity(snr)) + tol


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 25), st.floats(0.1, 3))
def test_cm_monotone_in_snr(snr, ds):
    assert cm_mi_quad(QAM64, snr + ds, 24) >= cm_mi_quad(QAM64, snr, 24) - 1e-9
