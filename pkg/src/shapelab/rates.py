"""Achievable information rates over the complex AWGN channel.

Channel convention: ``Y = sqrt(SNR) * X + Z`` with ``E|X|^2 = 1`` and ``Z``
circular complex Gaussian with variance 1/2 per real dimension, so SNR is the
ratio of mean constellation power to total noise power.  All rates are in bits
per complex channel use.

Three rates are provided for a labeled format ``X = mu(S_1, ..., S_m)``:

* CM:   I(X;Y)
* S-CM: H(S_1..S_m) - sum_i H(S_i|Y) over q-ary symbol labels
* B-CM: the same expression over binary labels (bit-metric / BICM rate)

Each is evaluated either by tensor Gauss-Hermite quadrature (deterministic) or
by Monte Carlo (seeded).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .constellation import Constellation, entropy_bits

__all__ = [
    "RatePoint",
    "RateCurve",
    "RateError",
    "capacity",
    "cm_mi_quad",
    "cm_mi_mc",
    "scm_mi",
    "bcm_mi",
    "rate_point",
    "rate_curve",
    "snr_gap",
    "snr_for_rate",
    "gaussian_snr_for_rate",
]

LOG2E = 1.0 / math.log(2.0)
MC_CHUNK = 1 << 15


class RateError(ValueError):
    pass


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def capacity(snr_db: float) -> float:
    """Gaussian-input capacity log2(1 + SNR)."""
    if snr_db == -math.inf:
        return 0.0
    return float(np.log2(1.0 + db2lin(snr_db)))


def gaussian_snr_for_rate(rate_bits: float) -> float:
    """SNR in dB at which log2(1 + SNR) equals ``rate_bits``."""
    return float(10.0 * np.log10(np.expm1(rate_bits * math.log(2.0))))


# ---------------------------------------------------------------------------
# core kernels

def _gh_nodes(order: int):
    """Tensor Gauss-Hermite nodes/weights for E[f(Z)], Z ~ CN(0, 1)."""
    t, w = np.polynomial.hermite.hermgauss(order)
    zr, zi = np.meshgrid(t, t, indexing="ij")
    wt = np.outer(w, w).ravel() / math.pi
    keep = wt > 1e-300
    return (zr.ravel() + 1j * zi.ravel())[keep], wt[keep]


def _canonical_points(points: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Rotate the constellation to an orientation fixed by its lowest non-vanishing
    angular moment, so quadrature results do not depend on how it was rotated."""
    r = np.abs(points)
    for k in range(1, 65):
        mom = np.sum(probs * points ** k)
        scale = np.sum(probs * r ** k)
        if scale > 0 and abs(mom) > 1e-8 * scale:
            return points * np.exp(-1j * np.angle(mom) / k)
    return points


def _class_partitions(c: Constellation, kind: str) -> list:
    if kind == "scm":
        if c.symbolic is None:
            raise RateError(f"S-CM rate needs symbolic labels; {c.name!r} has none")
        cols = c.symbolic
    elif kind == "bcm":
        if c.binary is None:
            raise RateError(f"B-CM rate needs binary labels; {c.name!r} has none")
        cols = c.bit_matrix()
    else:
        raise RateError(f"unknown label kind {kind!r}")
    keys = {tuple(row) for row in cols}
    if len(keys) != len(c):
        raise RateError(f"{kind} labeling of {c.name!r} is not a bijection onto the points")
    return [cols[:, i] for i in range(cols.shape[1])]


def _log_post(y: np.ndarray, sp: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """log P(x'|y) for every received sample (rows) and candidate point (cols)."""
    d = y[:, None] - sp[None, :]
    metric = logp[None, :] - (d.real ** 2 + d.imag ** 2)
    return metric - logsumexp(metric, axis=1, keepdims=True)


def _class_lse(lp: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Log-posterior of every label class; trailing axis indexes the classes of ``col``."""
    classes = np.unique(col)
    return np.stack([logsumexp(lp[..., col == v], axis=-1) for v in classes], axis=-1), classes


def _sample_terms(i: int, lp: np.ndarray, logp: np.ndarray, partitions: list) -> np.ndarray:
    """Per-sample information terms for transmitted point ``i``.

    Column 0: log2 P(x_i|y) - log2 p(x_i)  (information density).
    Column 1+j: sum over positions of log2 P(label(x_i) | y) for partition set j.
    """
    out = [(lp[:, i] - logp[i]) * LOG2E]
    for parts in partitions:
        acc = np.zeros(lp.shape[0])
        for col in parts:
            acc += logsumexp(lp[:, col == col[i]], axis=1)
        out.append(acc * LOG2E)
    return np.column_stack(out)


def _prepare(c: Constellation, snr_db: float):
    if not np.isfinite(snr_db):
        raise RateError("snr_db must be finite")
    keep = c.probs > 0
    idx = np.flatnonzero(keep)
    sp = math.sqrt(float(db2lin(snr_db))) * c.points
    logp = np.full(len(c), -np.inf)
    logp[keep] = np.log(c.probs[keep])
    return idx, sp, logp


def _lse(a: np.ndarray) -> np.ndarray:
    """log-sum-exp over the trailing axis."""
    m = a.max(axis=-1)
    m = np.where(np.isfinite(m), m, 0.0)
    return m + np.log(np.exp(a - m[..., None]).sum(axis=-1))


def _quad_terms(c: Constellation, snr_db: float, order: int, partitions: list) -> np.ndarray:
    """Probability-weighted expectations of the per-sample terms.

    For transmitted x_i and node z the log-posterior of x_j is, up to a
    per-sample constant, ``log p_j - |d_ij|^2 - 2 Re(z conj(d_ij))`` with
    ``d_ij = sqrt(SNR) (x_i - x_j)``; the cross term is one matrix product.
    """
    if not 8 <= order <= 128:
        raise RateError(f"quadrature order must lie in [8, 128], got {order}")
    idx, _, logp = _prepare(c, snr_db)
    sp = math.sqrt(float(db2lin(snr_db))) * _canonical_points(c.points, c.probs)
    z, w = _gh_nodes(order)
    zri = np.column_stack([z.real, z.imag])
    n = len(c)
    total = np.zeros(1 + len(partitions))
    block = max(1, 2 ** 20 // (z.size * n))
    for start in range(0, idx.size, block):
        rows = idx[start:start + block]
        d = sp[rows, None] - sp[None, :]
        base = logp[None, :] - (d.real ** 2 + d.imag ** 2)
        metric = zri @ np.stack([d.real.ravel(), d.imag.ravel()])
        metric *= -2.0
        metric += base.ravel()
        metric = metric.reshape(z.size, rows.size, n)
        norm = _lse(metric)
        # own metric is logp_i (d_ii = 0), so log P(x_i|y) - log p_i = -norm
        terms = [-norm * LOG2E]
        for parts in partitions:
            acc = np.zeros((z.size, rows.size))
            for col in parts:
                own = col[rows]
                for v in np.unique(own):
                    sel = own == v
                    sub = metric[:, sel][:, :, col == v]
                    acc[:, sel] += _lse(sub) - norm[:, sel]
            terms.append(acc * LOG2E)
        for j, t in enumerate(terms):
            total[j] += c.probs[rows] @ (w @ t)
    return total


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _mc_terms(c: Constellation, snr_db: float, n_samples: int, seed: int, partitions: list):
    """Sample means and standard errors of the per-sample terms."""
    if n_samples < 1000:
        raise RateError("Monte Carlo estimates need at least 1000 samples")
    idx, sp, logp = _prepare(c, snr_db)
    k = 1 + len(partitions)
    s1 = np.zeros(k)
    s2 = np.zeros(k)
    done = 0
    chunk = 0
    while done < n_samples:
        n = min(MC_CHUNK, n_samples - done)
        rng = _chunk_rng(seed, chunk)
        tx = rng.choice(len(c), size=n, p=c.probs)
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * math.sqrt(0.5)
        for i in np.unique(tx):
            sel = tx == i
            lp = _log_post(sp[i] + z[sel], sp, logp)
            t = _sample_terms(i, lp, logp, partitions)
            s1 += t.sum(axis=0)
            s2 += (t ** 2).sum(axis=0)
        done += n
        chunk += 1
    mean = s1 / n_samples
    var = np.maximum(s2 / n_samples - mean ** 2, 0.0)
    return mean, np.sqrt(var / (n_samples - 1))


# ---------------------------------------------------------------------------
# public rate functions

def cm_mi_quad(c: Constellation, snr_db: float, order: int = 48) -> float:
    """I(X;Y) by tensor Gauss-Hermite quadrature of the given order."""
    return float(_quad_terms(c, snr_db, order, [])[0])


def cm_mi_mc(c: Constellation, snr_db: float, n_samples: int = 10 ** 6, seed: int = 0):
    """Monte Carlo I(X;Y); returns ``(bits, stderr)``.

    Samples are drawn in fixed-size chunks, each seeded from ``(seed, chunk
    index)``, so the result does not depend on how chunks are scheduled.
    """
    mean, se = _mc_terms(c, snr_db, n_samples, seed, [])
    return float(mean[0]), float(se[0])


def _label_rate(c, snr_db, kind, method, order, n_samples, seed):
    parts = _class_partitions(c, kind)
    hx = entropy_bits(c.probs)
    if method == "quad":
        t = _quad_terms(c, snr_db, order, [parts])
        return max(0.0, hx + float(t[1])), 0.0
    if method == "mc":
        mean, se = _mc_terms(c, snr_db, n_samples, seed, [parts])
        return max(0.0, hx + float(mean[1])), float(se[1])
    raise RateError(f"unknown method {method!r}")


def scm_mi(c: Constellation, snr_db: float, method: str = "quad", order: int = 48,
           n_samples: int = 10 ** 6, seed: int = 0) -> float:
    """Symbol-wise MAP rate ``(H(S_1..S_m) - sum_i H(S_i|Y))^+`` from symbolic labels."""
    return _label_rate(c, snr_db, "scm", method, order, n_samples, seed)[0]


def bcm_mi(c: Constellation, snr_db: float, method: str = "quad", order: int = 48,
           n_samples: int = 10 ** 6, seed: int = 0) -> float:
    """Bit-wise MAP rate ``(H(B_1..B_m') - sum_i H(B_i|Y))^+`` from binary labels.

    For uniform independent bits this is the usual BICM GMI, ``sum_i I(B_i;Y)``.
    """
    return _label_rate(c, snr_db, "bcm", method, order, n_samples, seed)[0]


@dataclass
class RatePoint:
    snr_db: float
    capacity_bits: float
    cm_bits: Optional[float] = None
    scm_bits: Optional[float] = None
    bcm_bits: Optional[float] = None
    stderr: dict = field(default_factory=dict)


@dataclass
class RateCurve:
    format_id: str
    shaping: str
    points: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["snr_db", "capacity", "cm", "scm", "bcm", "stderr"])
        for p in self.points:
            se = p.stderr.get("cm", "") if p.stderr else ""
            wr.writerow([_fmt(p.snr_db), _fmt(p.capacity_bits), _fmt(p.cm_bits),
                         _fmt(p.scm_bits), _fmt(p.bcm_bits), _fmt(se)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, format_id: str = "", shaping: str = "") -> "RateCurve":
        rows = list(csv.DictReader(io.StringIO(text)))
        pts = []
        for r in rows:
            val = lambda k: float(r[k]) if r[k] != "" else None
            se = val("stderr")
            pts.append(RatePoint(val("snr_db"), val("capacity"), val("cm"), val("scm"), val("bcm"),
                                 {} if se is None else {"cm": se}))
        return cls(format_id, shaping, pts)


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    return format(float(x), ".17g")


def rate_point(c: Constellation, snr_db: float, metrics: Sequence[str] = ("cm",),
               method: str = "quad", order: int = 48, n_samples: int = 10 ** 6,
               seed: int = 0) -> RatePoint:
    """Evaluate several rates at one SNR with a single pass over the samples."""
    metrics = list(metrics)
    bad = set(metrics) - {"cm", "scm", "bcm"}
    if bad:
        raise RateError(f"unknown metrics {sorted(bad)}")
    partitions = [_class_partitions(c, k) for k in ("scm", "bcm") if k in metrics]
    names = [k for k in ("scm", "bcm") if k in metrics]
    hx = entropy_bits(c.probs)
    if method == "quad":
        t = _quad_terms(c, snr_db, order, partitions)
        se = np.zeros_like(t)
    elif method == "mc":
        t, se = _mc_terms(c, snr_db, n_samples, seed, partitions)
    else:
        raise RateError(f"unknown method {method!r}")
    pt = RatePoint(snr_db=float(snr_db), capacity_bits=capacity(snr_db))
    if "cm" in metrics:
        pt.cm_bits = float(t[0])
    for j, name in enumerate(names):
        setattr(pt, f"{name}_bits", max(0.0, hx + float(t[1 + j])))
    if method == "mc":
        pt.stderr = {"cm": float(se[0]), **{n: float(se[1 + j]) for j, n in enumerate(names)}}
    return pt


def rate_curve(c: Constellation, snrs_db: Iterable[float], metrics=("cm",), method="quad",
               order=48, n_samples=10 ** 6, seed=0, shaping: str = "") -> RateCurve:
    pts = [rate_point(c, s, metrics, method, order, n_samples, seed) for s in sorted(snrs_db)]
    return RateCurve(c.name, shaping, pts)


def snr_for_rate(c: Constellation, target_bits: float,
                 rate_fn: Callable[[Constellation, float], float] = cm_mi_quad,
                 tol_db: float = 1e-6, max_db: float = 60.0) -> float:
    """SNR (dB) at which ``rate_fn`` reaches ``target_bits``.

    The Gaussian-input SNR for the target is a lower bound for any discrete
    format; the bracket is grown upward from it and refined with Brent's method.
    """
    hx = entropy_bits(c.probs)
    if not 0 < target_bits < hx:
        raise RateError(f"target {target_bits} bits not reachable: need 0 < target < H(X) = {hx:.6g}")
    f = lambda s: rate_fn(c, s) - target_bits
    lo = gaussian_snr_for_rate(target_bits)
    while f(lo) > 0:
        lo -= 0.5
    step = 0.25
    hi = lo + step
    while f(hi) < 0:
        lo, hi = hi, hi + step
        step *= 2
        if hi > max_db:
            raise RateError(f"target {target_bits} bits not reached below {max_db} dB")
    return float(brentq(f, lo, hi, xtol=tol_db, rtol=1e-12))


def snr_gap(c: Constellation, target_rate_bits: float,
            rate_fn: Callable[[Constellation, float], float] = cm_mi_quad,
            probs: Optional[np.ndarray] = None, tol_db: float = 1e-6) -> float:
    """SNR penalty in dB of the format relative to log2(1+SNR) at a target rate.

    ``probs`` optionally replaces the format's distribution (the points are then
    renormalized to unit power).
    """
    if probs is not None:
        c = c.with_probs(probs)
    return snr_for_rate(c, target_rate_bits, rate_fn, tol_db=tol_db) - gaussian_snr_for_rate(target_rate_bits)
