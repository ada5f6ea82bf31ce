"""Maxwell-Boltzmann probabilistic shaping of a fixed constellation geometry.

The MB parameter ``lam`` always refers to the geometry it is applied to (the
unit-power uniform constellation returned by the constructors): point ``x``
gets weight ``exp(-lam * |x|^2)``.  The weighted constellation is then rescaled
to unit mean power, so SNR keeps the same meaning for every ``lam``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .constellation import Constellation, entropy_bits, stretch
from . import rates

__all__ = [
    "ShapingProfile",
    "ShapingError",
    "mb_weights",
    "lambda_for_entropy",
    "optimize_lambda_for_mi",
    "optimize_band",
    "optimize_stretch",
    "golden_section_max",
    "LAMBDA_RANGE",
]

LAMBDA_RANGE = (0.0, 4.0)
INV_PHI = (math.sqrt(5) - 1) / 2

RateFn = Callable[[Constellation, float], float]


class ShapingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ShapingProfile:
    lam: float
    probs: np.ndarray
    entropy_bits: float
    constellation: Constellation
    objective: dict = field(default_factory=lambda: {"kind": "fixed"})

    def sidecar(self) -> str:
        """JSON sidecar stored next to the constellation file."""
        return json.dumps({"lambda": float(format(self.lam, ".17g")),
                           "entropy_bits": float(format(self.entropy_bits, ".17g")),
                           "objective": self.objective}, indent=1)


def _per_axis_probs(points: np.ndarray, lam: float) -> np.ndarray:
    """Product of independent MB laws on the in-phase and quadrature amplitudes."""
    out = np.ones(points.size)
    for comp in (points.real, points.imag):
        levels, inv = np.unique(np.round(comp, 12), return_inverse=True)
        pa = np.exp(-lam * (levels ** 2 - (levels ** 2).min()))
        out *= (pa / pa.sum())[inv]
    return out / out.sum()


def _joint_probs(points: np.ndarray, lam: float) -> np.ndarray:
    r2 = np.abs(points) ** 2
    w = np.exp(-lam * (r2 - r2.min()))
    return w / w.sum()


def _is_square_grid(c: Constellation) -> bool:
    re = np.unique(np.round(c.points.real, 12))
    im = np.unique(np.round(c.points.imag, 12))
    return re.size * im.size == len(c)


def mb_weights(c: Constellation, lam: float, mode: str = "auto") -> ShapingProfile:
    """MB distribution ``p_i ~ exp(-lam |x_i|^2)`` on the geometry of ``c``.

    ``mode="per_axis"`` (square grids only) shapes each quadrature separately;
    since ``|x|^2 = a_I^2 + a_Q^2`` the product law coincides with the joint one.
    ``"auto"`` picks per-axis for square grids and joint otherwise.
    """
    if not lam >= 0:
        raise ShapingError(f"MB parameter must be >= 0, got {lam!r}")
    if mode == "auto":
        mode = "per_axis" if _is_square_grid(c) and c.points.imag.any() else "joint"
    if mode == "per_axis":
        if not _is_square_grid(c):
            raise ShapingError("per-axis shaping needs a square grid constellation")
        p = _per_axis_probs(c.points, lam)
    elif mode == "joint":
        p = _joint_probs(c.points, lam)
    else:
        raise ShapingError(f"unknown shaping mode {mode!r}")
    shaped = c.with_probs(p)
    shaped.meta["mb_lambda"] = float(lam)
    return ShapingProfile(lam=float(lam), probs=shaped.probs, entropy_bits=entropy_bits(shaped.probs),
                          constellation=shaped, objective={"kind": "fixed", "mode": mode})


def _entropy_at(c: Constellation, lam: float) -> float:
    return entropy_bits(_joint_probs(c.points, lam))


def lambda_for_entropy(c: Constellation, target_bits: float, tol_bits: float = 1e-6) -> ShapingProfile:
    """MB profile whose entropy equals ``target_bits``.

    Entropy falls strictly with ``lam`` from ``log2|X|`` towards the log of the
    number of minimum-modulus points, which bounds the reachable targets.
    """
    n = len(c)
    r2 = np.abs(c.points) ** 2
    floor = math.log2(int(np.sum(np.isclose(r2, r2.min(), rtol=0, atol=1e-12))))
    top = math.log2(n)
    if not floor < target_bits <= top + 1e-12:
        raise ShapingError(f"entropy target {target_bits} outside ({floor:.6g}, {top:.6g}]")
    if target_bits >= top - 1e-12:
        lam = 0.0
    else:
        hi = 1.0
        while _entropy_at(c, hi) > target_bits:
            hi *= 2.0
            if hi > 1e8:
                raise ShapingError("entropy target not bracketed")
        lam = brentq(lambda l: _entropy_at(c, l) - target_bits, 0.0, hi, xtol=1e-15, rtol=1e-15,
                     maxiter=500)
    prof = mb_weights(c, lam)
    if abs(prof.entropy_bits - target_bits) > tol_bits:
        raise ShapingError(f"entropy bisection missed target by {prof.entropy_bits - target_bits:.3g} bits")
    return ShapingProfile(prof.lam, prof.probs, prof.entropy_bits, prof.constellation,
                          {"kind": "entropy-target", "target": float(target_bits)})


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4):
    """Maximize a unimodal function on [lo, hi]; returns ``(x, f(x), at_bound)``.

    The interior optimum is compared against both endpoints so boundary maxima
    are reported rather than missed.
    """
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    x, fx = (x1, f1) if f1 >= f2 else (x2, f2)
    for edge in (lo, hi):
        fe = f(edge)
        if fe > fx:
            return edge, fe, True
    return x, fx, False


def _rate_fn(rate: Union[str, RateFn], order: int) -> RateFn:
    if callable(rate):
        return rate
    table = {
        "cm": lambda c, s: rates.cm_mi_quad(c, s, order),
        "scm": lambda c, s: rates.scm_mi(c, s, order=order),
        "bcm": lambda c, s: rates.bcm_mi(c, s, order=order),
    }
    try:
        return table[rate]
    except KeyError:
        raise ShapingError(f"unknown rate {rate!r}; expected cm, scm, bcm or a callable") from None


def optimize_lambda_for_mi(c: Constellation, snr_db: float, rate: Union[str, RateFn] = "cm",
                           order: int = 48, tol: float = 1e-4,
                           lam_range: Sequence[float] = LAMBDA_RANGE) -> ShapingProfile:
    """MB parameter in [0, 4] maximizing the chosen rate at one SNR (golden section)."""
    if not np.isfinite(snr_db):
        raise ShapingError("snr_db must be finite")
    fn = _rate_fn(rate, order)
    lam, val, at_bound = golden_section_max(lambda l: fn(mb_weights(c, l).constellation, snr_db),
                                            lam_range[0], lam_range[1], tol)
    prof = mb_weights(c, lam)
    name = rate if isinstance(rate, str) else getattr(rate, "__name__", "custom")
    return ShapingProfile(prof.lam, prof.probs, prof.entropy_bits, prof.constellation,
                          {"kind": "mi-max", "rate": name, "snr_db": float(snr_db),
                           "value_bits": float(val), "at_bound": bool(at_bound)})


def rate_gap_db(rate_bits: float, snr_db: float) -> float:
    """SNR excess (dB) over the capacity-achieving SNR for the same rate."""
    return snr_db - 10.0 * math.log10(math.expm1(rate_bits * math.log(2.0)))


def band_gap_estimate(c: Constellation, snrs_db: Sequence[float], order: int = 16) -> float:
    """Worst CM gap (dB) to log2(1+SNR) over a set of SNRs."""
    return max(rate_gap_db(rates.cm_mi_quad(c, s, order), s) for s in snrs_db)


def optimize_band(c: Constellation, snrs_db: Sequence[float], order: int = 16,
                  tol: float = 1e-4) -> ShapingProfile:
    """MB parameter in [0, 4] minimizing the worst CM gap over an SNR band."""
    lam, val, at_bound = golden_section_max(
        lambda l: -band_gap_estimate(mb_weights(c, l).constellation, snrs_db, order),
        LAMBDA_RANGE[0], LAMBDA_RANGE[1], tol)
    prof = mb_weights(c, lam)
    return ShapingProfile(prof.lam, prof.probs, prof.entropy_bits, prof.constellation,
                          {"kind": "band-gap", "snrs_db": [float(s) for s in snrs_db],
                           "gap_db_estimate": float(-val), "at_bound": bool(at_bound)})


def optimize_stretch(c: Constellation, snrs_db: Sequence[float] = (8.0, 10.0, 12.0),
                     order: int = 16, coarse: float = 0.25, step: float = 0.01,
                     alpha_range: Sequence[float] = (0.25, 4.0), lam_tol: float = 1e-3):
    """Radial stretch exponent and MB parameter minimizing the worst band gap.

    A coarse grid brackets the best exponent, golden section refines it inside
    the bracket, and the result is snapped to the ``step`` grid.  Returns
    ``(alpha, profile)`` where ``profile.constellation`` is stretched and shaped.
    """
    cache = {}

    def score(alpha):
        alpha = round(alpha, 10)
        if alpha not in cache:
            prof = optimize_band(stretch(c, alpha), snrs_db, order, lam_tol)
            cache[alpha] = (-prof.objective["gap_db_estimate"], prof)
        return cache[alpha][0]

    lo, hi = alpha_range
    grid = np.round(np.arange(lo, hi + 1e-9, coarse), 10)
    best = max(grid, key=score)
    a, b = max(lo, best - coarse), min(hi, best + coarse)
    x, _, _ = golden_section_max(score, a, b, step / 2)
    k = math.floor(x / step)
    snapped = [round(v * step, 10) for v in (k, k + 1) if lo <= v * step <= hi]
    alpha = max(snapped + [best], key=score)
    prof = cache[round(alpha, 10)][1]
    prof.constellation.meta["stretch"] = float(alpha)
    return float(alpha), prof
