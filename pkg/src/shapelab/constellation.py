"""Construction, labeling and measurement of square QAM and circular QAM formats.

A circular QAM (CQAM) with symmetry order ``q`` consists of ``q`` shells of ``q``
points each and maps onto itself under rotation by ``2*pi/q``.  Points of every
CQAM built here are stored shell-major: index ``k*q + j`` is point ``j`` (phase
class) of shell ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "Constellation",
    "ConstructionError",
    "FigureReport",
    "GRAY_3BIT",
    "make_pam",
    "make_square_qam",
    "make_cqam_star",
    "make_cqam_greedy",
    "make_cqam_two_dist",
    "make_cqam_hybrid",
    "gray_label_star",
    "measure",
    "stretch",
    "rotate",
    "is_rotation_invariant",
    "fundamental_set",
    "entropy_bits",
    "to_json",
    "from_json",
]

# ring/phase label sequence for 8-ary indices 0..7, cyclic Gray
GRAY_3BIT = ("111", "110", "100", "101", "001", "000", "010", "011")

PROB_TOL = 1e-12
POWER_TOL = 1e-9
DISTINCT_TOL = 1e-9


class ConstructionError(ValueError):
    """Raised when a constellation cannot be built from the given parameters."""


@dataclass(frozen=True, eq=False)
class Constellation:
    """A two-dimensional signal set together with its input distribution.

    Attributes
    ----------
    points : complex ndarray, shape (n,)
    probs : float ndarray, shape (n,), sums to one
    q : rotational symmetry order (1 when none is declared)
    name : free-form identifier
    normalized : when True, ``sum(probs * |points|**2) == 1``
    symbolic : optional int ndarray, shape (n, m), q-ary symbol labels
    binary : optional tuple of bit strings, one per point
    """

    points: np.ndarray
    probs: np.ndarray
    q: int = 1
    name: str = ""
    normalized: bool = True
    symbolic: Optional[np.ndarray] = None
    binary: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", p)
        n = pts.size
        if n == 0:
            raise ConstructionError("constellation must contain at least one point")
        if p.size != n:
            raise ConstructionError(f"{p.size} probabilities for {n} points")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
            raise ConstructionError("probabilities must be non-negative and sum to 1")
        if self.q < 1:
            raise ConstructionError("symmetry order q must be >= 1")
        if n > 1 and _min_pair_dist_sq(pts) <= DISTINCT_TOL**2:
            raise ConstructionError("constellation points must be pairwise distinct")
        if self.normalized:
            power = float(np.sum(p * np.abs(pts) ** 2))
            if abs(power - 1.0) > POWER_TOL:
                raise ConstructionError(f"flagged normalized but mean power is {power!r}")
        if self.symbolic is not None:
            sym = np.asarray(self.symbolic, dtype=np.int64)
            if sym.ndim == 1:
                sym = sym[:, None]
            if sym.shape[0] != n:
                raise ConstructionError("one symbolic label per point required")
            object.__setattr__(self, "symbolic", sym)
        if self.binary is not None:
            bits = tuple(str(b) for b in self.binary)
            if len(bits) != n:
                raise ConstructionError("one binary label per point required")
            if len({len(b) for b in bits}) != 1 or any(set(b) - {"0", "1"} for b in bits):
                raise ConstructionError("binary labels must be equal-length bit strings")
            object.__setattr__(self, "binary", bits)

    def __len__(self):
        return self.points.size

    @property
    def mean_power(self) -> float:
        return float(np.sum(self.probs * np.abs(self.points) ** 2))

    @property
    def entropy(self) -> float:
        return entropy_bits(self.probs)

    def bit_matrix(self) -> np.ndarray:
        """Binary labels as an int array of shape (n, m')."""
        if self.binary is None:
            raise ValueError(f"constellation {self.name!r} has no binary labels")
        return np.array([[int(ch) for ch in b] for b in self.binary], dtype=np.int64)

    def with_probs(self, probs, normalize: bool = True, name: Optional[str] = None) -> "Constellation":
        """Same geometry and labels under a new distribution, rescaled to unit power."""
        probs = np.asarray(probs, dtype=float)
        probs = probs / probs.sum()
        pts = self.points
        if normalize:
            pts = pts / math.sqrt(float(np.sum(probs * np.abs(pts) ** 2)))
        return replace(self, points=pts, probs=probs, normalized=normalize,
                       name=self.name if name is None else name, meta=dict(self.meta))


@dataclass(frozen=True)
class FigureReport:
    d_min_sq: float
    mean_power: float
    fom: float
    mu4: float
    mu6: float


def entropy_bits(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _min_pair_dist_sq(pts: np.ndarray) -> float:
    diff = pts[:, None] - pts[None, :]
    d2 = np.abs(diff) ** 2
    np.fill_diagonal(d2, np.inf)
    return float(d2.min())


def _normalize(pts: np.ndarray, probs: Optional[np.ndarray] = None) -> np.ndarray:
    if probs is None:
        power = float(np.mean(np.abs(pts) ** 2))
    else:
        power = float(np.sum(probs * np.abs(pts) ** 2))
    return pts / math.sqrt(power)


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def _gray(i: int) -> int:
    return i ^ (i >> 1)


# ---------------------------------------------------------------------------
# square formats

def pam_energy(m: int) -> float:
    """Mean energy of the unnormalized 2^m-PAM alphabet {+-1, +-3, ...}."""
    return (2 ** (2 * m) - 1) / 3


def _pam_levels(m: int) -> np.ndarray:
    P = 2 ** m
    return np.arange(-(P - 1), P, 2, dtype=float)


def make_pam(m: int, uniform: bool = True) -> Constellation:
    """Equally spaced, zero-centered 2^m-PAM on the real axis with unit mean power.

    Binary labels are the reflected Gray code of the amplitude index; symbolic
    labels are the amplitude index itself.  ``uniform=False`` is accepted for
    signature compatibility; shaping is applied separately.
    """
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= 8:
        raise ConstructionError(f"PAM order m must be an integer in [1, 8], got {m!r}")
    levels = _pam_levels(m) / math.sqrt(pam_energy(m))
    P = levels.size
    binary = tuple(format(_gray(i), f"0{m}b") for i in range(P))
    return Constellation(levels.astype(complex), _uniform(P), q=2, name=f"{P}-PAM",
                         symbolic=np.arange(P)[:, None], binary=binary,
                         meta={"kind": "pam", "m": int(m)})


def make_square_qam(m_per_axis: int) -> Constellation:
    """Cartesian product of two 2^m-PAM alphabets, 2^(2m) points, unit mean power.

    Point ``i*P + k`` has in-phase index ``i`` and quadrature index ``k``.
    Symbolic labels are ``(i, k)``; binary labels concatenate the per-axis
    Gray codes (in-phase bits first).
    """
    m = m_per_axis
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= 4:
        raise ConstructionError(f"QAM bits per axis must be an integer in [1, 4], got {m!r}")
    levels = _pam_levels(m)
    P = levels.size
    ii, kk = np.meshgrid(np.arange(P), np.arange(P), indexing="ij")
    ii, kk = ii.ravel(), kk.ravel()
    pts = (levels[ii] + 1j * levels[kk]) / math.sqrt(2 * pam_energy(m))
    binary = tuple(format(_gray(i), f"0{m}b") + format(_gray(k), f"0{m}b") for i, k in zip(ii, kk))
    return Constellation(pts, _uniform(P * P), q=4, name=f"{P * P}-QAM",
                         symbolic=np.column_stack([ii, kk]), binary=binary,
                         meta={"kind": "qam", "m": int(m)})


# ---------------------------------------------------------------------------
# circular formats

def _check_q(q) -> int:
    if not isinstance(q, (int, np.integer)) or q < 2:
        raise ConstructionError(f"CQAM symmetry order q must be an integer >= 2, got {q!r}")
    return int(q)


def _assemble_cqam(radii, offsets, q: int, name: str, kind: str, **meta) -> Constellation:
    radii = np.asarray(radii, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    j = np.arange(q)
    pts = (radii[:, None] * np.exp(1j * (offsets[:, None] + 2 * np.pi * j[None, :] / q))).ravel()
    scale = 1.0 / math.sqrt(float(np.mean(np.abs(pts) ** 2)))
    pts = pts * scale
    kk, jj = np.meshgrid(np.arange(q), j, indexing="ij")
    symbolic = np.column_stack([jj.ravel(), kk.ravel()])
    meta = dict(meta, kind=kind, radii=(radii * scale).tolist(), offsets=offsets.tolist())
    return Constellation(pts, _uniform(q * q), q=q, name=name, symbolic=symbolic, meta=meta)


def make_cqam_star(q: int, shell_gap: Optional[float] = None) -> Constellation:
    """Phase-aligned CQAM: shell ``k`` at radius ``r0 * (1 + k * shell_gap)``.

    The default gap equals the intra-shell chord ``2 sin(pi/q)``, so adjacent
    shells are exactly one minimum distance apart.
    """
    q = _check_q(q)
    if shell_gap is None:
        shell_gap = 2 * math.sin(math.pi / q)
    if not shell_gap > 0:
        raise ConstructionError("shell_gap must be positive")
    radii = 1.0 + shell_gap * np.arange(q)
    return _assemble_cqam(radii, np.zeros(q), q, f"{q}x{q}-CQAM-star", "cqam-star",
                          shell_gap=float(shell_gap))


def _contact_radius(existing: np.ndarray, phase: float, start: float, step: float,
                    d_min: float, budget: float) -> float:
    """Smallest radius ``start + n*step`` (n >= 0) at which a point of the given
    phase keeps distance >= d_min from every existing point; inf past budget."""
    u = np.exp(1j * phase)
    proj = (existing * np.conj(u)).real
    disc = proj ** 2 - (np.abs(existing) ** 2 - d_min ** 2)
    hit = disc > 0
    sq = np.sqrt(disc[hit])
    lo, hi = proj[hit] - sq, proj[hit] + sq
    tol = 1e-12 * max(1.0, d_min)
    n = 0
    r = start
    moved = True
    while moved:
        moved = False
        inside = (lo + tol < r) & (r < hi - tol)
        if inside.any():
            top = hi[inside].max()
            n = max(n + 1, math.ceil((top - tol - start) / step))
            r = start + n * step
            if r - start > budget:
                return math.inf
            moved = True
    return r


def _pair_stats(z: complex, existing: np.ndarray):
    d = np.sort(np.abs(existing - z))
    return float(d[0]), float(d[1]) if d.size > 1 else math.inf


def _shell_points(radius: float, offset: float, q: int) -> np.ndarray:
    return radius * np.exp(1j * (offset + 2 * np.pi * np.arange(q) / q))


def _greedy_shells(q: int, phase_grid: int, radius_step: Optional[float], rule: str):
    """Shell-by-shell construction shared by the greedy, 2-dist and hybrid formats.

    rule:
      ``"pack"``   next shell at the smallest feasible radius (ties: larger
                   nearest distance, then smaller phase).
      ``"twodist"`` shells 0 and 1 as ``"pack"``; later shells choose, among
                   contact placements within half a minimum distance of the
                   tightest one, the largest second-nearest distance.
      ``"sector"`` as ``"twodist"`` with phase offsets restricted to the sector
                   start or the sector centre.
    """
    d_min = 2 * math.sin(math.pi / q)
    if radius_step is None:
        radius_step = 1e-3 * d_min
    budget = 100 * d_min
    if rule == "sector":
        phases = np.array([0.0, math.pi / q])
    else:
        phases = np.arange(phase_grid) * (2 * math.pi / q) / phase_grid
    radii, offsets = [1.0], [0.0]
    existing = _shell_points(1.0, 0.0, q)
    for k in range(1, q):
        start = radii[-1] + radius_step
        cands = []
        for phi in phases:
            r = _contact_radius(existing, phi, start, radius_step, d_min, budget)
            if not math.isfinite(r):
                continue
            d1, d2 = _pair_stats(r * np.exp(1j * phi), existing)
            cands.append((r, phi, d1, d2))
        if not cands:
            raise ConstructionError(
                f"shell {k}: no placement keeps d_min={d_min:.6g} within radius budget {budget:.6g}")
        r_best = min(c[0] for c in cands)
        if rule == "pack" or k == 1:
            pool = [c for c in cands if c[0] <= r_best + 0.5 * radius_step]
            r, phi, _, _ = min(pool, key=lambda c: (c[0], -c[2], c[1]))
        else:
            pool = [c for c in cands if c[0] <= r_best + 0.5 * d_min]
            r, phi, _, _ = min(pool, key=lambda c: (-round(c[3], 9), c[0], c[1]))
        radii.append(r)
        offsets.append(phi)
        existing = np.concatenate([existing, _shell_points(r, phi, q)])
    return np.array(radii), np.array(offsets), d_min


def make_cqam_greedy(q: int, phase_grid: int = 256, radius_step: Optional[float] = None) -> Constellation:
    """Minimum-distance-driven CQAM built one shell at a time.

    Shell 0 sits at radius 1 with phase 0, fixing d_min to its chord
    ``2 sin(pi/q)``.  Every later shell goes to the smallest radius (on a grid of
    ``radius_step`` above the previous shell) for which some phase offset in
    ``[0, 2pi/q)`` keeps all inter-shell distances >= d_min.
    """
    q = _check_q(q)
    if phase_grid < 8:
        raise ConstructionError("phase_grid must be >= 8")
    if radius_step is not None and not radius_step > 0:
        raise ConstructionError("radius_step must be positive")
    radii, offsets, _ = _greedy_shells(q, phase_grid, radius_step, "pack")
    return _assemble_cqam(radii, offsets, q, f"{q}x{q}-CQAM-greedy", "cqam-greedy")


def make_cqam_two_dist(q: int, phase_grid: int = 256, radius_step: Optional[float] = None) -> Constellation:
    """CQAM driven by d_min first and the second-nearest distance second."""
    q = _check_q(q)
    if phase_grid < 8:
        raise ConstructionError("phase_grid must be >= 8")
    radii, offsets, _ = _greedy_shells(q, phase_grid, radius_step, "twodist")
    return _assemble_cqam(radii, offsets, q, f"{q}x{q}-CQAM-2dist", "cqam-2dist")


def make_cqam_hybrid(q: int, radius_step: Optional[float] = None) -> Constellation:
    """Two-distance CQAM whose points keep to fixed angular sectors of width 2pi/q."""
    q = _check_q(q)
    radii, offsets, _ = _greedy_shells(q, 8, radius_step, "sector")
    return _assemble_cqam(radii, offsets, q, f"{q}x{q}-CQAM-hybrid", "cqam-hybrid")


def gray_label_star(c: Constellation) -> Constellation:
    """Attach 6-bit labels (ring bits then phase bits) to an 8x8 star/hybrid CQAM."""
    if c.q != 8 or len(c) != 64 or c.symbolic is None or c.symbolic.shape[1] != 2:
        raise ConstructionError("gray_label_star supports 8x8 CQAM with (phase, ring) symbols only")
    binary = tuple(GRAY_3BIT[ring] + GRAY_3BIT[phase] for phase, ring in c.symbolic)
    return replace(c, binary=binary, meta=dict(c.meta))


# ---------------------------------------------------------------------------
# measurement and transforms

def measure(c: Constellation) -> FigureReport:
    """Squared minimum distance, mean power, figure of merit and 4th/6th moments.

    The figure of merit uses the plain (unweighted) point energy sum:
    ``|X| * d_min^2 / sum_x |x|^2``.
    """
    r2 = np.abs(c.points) ** 2
    d2 = _min_pair_dist_sq(c.points) if len(c) > 1 else math.inf
    return FigureReport(
        d_min_sq=d2,
        mean_power=float(np.sum(c.probs * r2)),
        fom=float(len(c) * d2 / r2.sum()),
        mu4=float(np.sum(c.probs * r2 ** 2)),
        mu6=float(np.sum(c.probs * r2 ** 3)),
    )


def stretch(c: Constellation, alpha: float) -> Constellation:
    """Radial power law r -> r**alpha, phases kept, renormalized to unit power."""
    if not 0.25 <= alpha <= 4:
        raise ConstructionError(f"stretch exponent must lie in [0.25, 4], got {alpha!r}")
    r = np.abs(c.points)
    pts = r ** alpha * np.exp(1j * np.angle(c.points))
    pts = _normalize(pts, c.probs)
    meta = dict(c.meta, stretch=float(alpha))
    return replace(c, points=pts, normalized=True, meta=meta)


def rotate(c: Constellation, theta: float) -> Constellation:
    return replace(c, points=c.points * np.exp(1j * theta), meta=dict(c.meta))


def is_rotation_invariant(c: Constellation, tol: float = 1e-9) -> bool:
    """True when rotation by 2pi/q permutes the points and preserves probabilities."""
    rot = c.points * np.exp(2j * np.pi / c.q)
    dist = np.abs(rot[:, None] - c.points[None, :])
    match = dist.argmin(axis=1)
    if np.any(dist[np.arange(len(c)), match] > tol):
        return False
    if np.unique(match).size != len(c):
        return False
    return bool(np.all(np.abs(c.probs[match] - c.probs) <= tol))


def fundamental_set(c: Constellation, tol: float = 1e-9) -> np.ndarray:
    """Indices of the points with phase in [0, 2pi/q), ordered by modulus then phase.

    Rotations of this set by multiples of 2pi/q generate the whole constellation.
    """
    if c.q < 2:
        raise ConstructionError("fundamental set requires a symmetry order q >= 2")
    phase = np.mod(np.angle(c.points), 2 * np.pi)
    phase[phase > 2 * np.pi - tol] = 0.0
    sel = np.flatnonzero(phase < 2 * np.pi / c.q - tol)
    order = np.lexsort((phase[sel], np.round(np.abs(c.points[sel]), 12)))
    idx = sel[order]
    if idx.size * c.q != len(c):
        raise ConstructionError("constellation is not generated by rotations of its fundamental sector")
    return idx


# ---------------------------------------------------------------------------
# serialization

def _f17(x: float) -> float:
    return float(format(float(x), ".17g"))


def to_json(c: Constellation, **extra) -> str:
    doc = {
        "name": c.name,
        "q": int(c.q),
        "normalized": bool(c.normalized),
        "points": [[_f17(z.real), _f17(z.imag)] for z in c.points],
        "probs": [_f17(p) for p in c.probs],
        "labels": {
            "symbolic": None if c.symbolic is None else c.symbolic.tolist(),
            "binary": None if c.binary is None else list(c.binary),
        },
    }
    doc.update(extra)
    return json.dumps(doc, indent=1)


def from_json(text: str) -> Constellation:
    doc = json.loads(text)
    pts = np.array([complex(re, im) for re, im in doc["points"]])
    labels = doc.get("labels") or {}
    sym = labels.get("symbolic")
    return Constellation(
        pts, np.array(doc["probs"], dtype=float), q=int(doc.get("q", 1)),
        name=doc.get("name", ""), normalized=bool(doc.get("normalized", True)),
        symbolic=None if sym is None else np.array(sym, dtype=np.int64),
        binary=labels.get("binary"),
    )
