"""Generalized probabilistic amplitude shaping (PAS): rate planning, matching, mapping.

Layering (all lengths in q-ary symbols unless noted):

    M info symbols --split r--> (1-r)M --DM--> N*R_AM amplitude labels
                           \\--> r*M uncoded region symbols
    systematic code (rate R_C) over the DM output and the r-fraction adds
    N - r*M parity symbols; region symbols = r-fraction + parity (N total).
    Channel symbol = rotation(region) applied to fundamental point(amplitude).

FEC is not implemented: parity symbols come from a seeded uniform source.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .constellation import Constellation, fundamental_set

__all__ = [
    "PasError",
    "PasPlan",
    "Composition",
    "PasFrame",
    "compatibility_residual",
    "min_code_rate",
    "plan_rates",
    "split_for",
    "max_entropy",
    "quantize_composition",
    "kl_bits",
    "ccdm_input_bits",
    "ccdm_encode",
    "ccdm_decode",
    "fundamental_points",
    "pas_map",
    "pas_map_indices",
    "pas_demap_hard",
    "pas_frame",
    "pas_deframe",
    "frame_to_bytes",
    "frame_from_bytes",
]

FRAME_MAGIC = b"PASF"
FRAME_VERSION = 1
_HEADER = struct.Struct("<4sBBHIIIIIQ")
FRAMING_Q = (2, 4, 8)


class PasError(ValueError):
    pass


# ---------------------------------------------------------------------------
# rate algebra

def compatibility_residual(R_C: float, R_AM: float, R_DM: float, r: float) -> float:
    """Left-hand side of the rate compatibility polynomial (zero when consistent)."""
    return (R_C - r * R_C - R_AM + R_AM * R_C + r * R_AM - r * R_AM * R_C - r * R_AM * R_DM)


def min_code_rate(R_AM: float) -> float:
    """Smallest compatible code rate, reached with no uncoded split (r = 0)."""
    if R_AM < 1:
        raise PasError(f"region-labeling rate R_AM must be >= 1, got {R_AM}")
    return R_AM / (1.0 + R_AM)


def max_entropy(q: int, R_DM: float) -> float:
    """Upper bound on transmitted entropy in bits: log2(q) * (1 + R_DM)."""
    if q < 2 or not 0 < R_DM <= 1:
        raise PasError("need q >= 2 and 0 < R_DM <= 1")
    return math.log2(q) * (1.0 + R_DM)


@dataclass(frozen=True)
class PasPlan:
    q: int
    R_AM: float
    R_DM: float
    R_C: float
    r: float
    R_T: float
    R_T_bits: float
    family: str = "cqam"
    M: Optional[float] = None
    N: Optional[int] = None
    padding_bits: int = 0

    @property
    def residual(self) -> float:
        return compatibility_residual(self.R_C, self.R_AM, self.R_DM, self.r)

    def to_json(self) -> str:
        return json.dumps({k: (float(format(v, ".17g")) if isinstance(v, float) else v)
                           for k, v in asdict(self).items()}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "PasPlan":
        doc = json.loads(text)
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


def _family(q: int, family: str) -> str:
    if family == "auto":
        return "pam2" if q == 2 else "cqam"
    if family not in ("cqam", "pam2"):
        raise PasError(f"unknown plan family {family!r}")
    return family


def _total_rate(R_C, R_AM, R_DM):
    return R_C - R_AM + R_AM * R_C + R_AM * R_DM


def _bits(q, R_T, family):
    # pam2: binary PAS on each quadrature, two real dimensions per 2-D use
    return (2.0 if family == "pam2" else 1.0) * math.log2(q) * R_T


def _check_common(q, R_AM, R_DM):
    if not isinstance(q, (int, np.integer)) or q < 2:
        raise PasError(f"alphabet size q must be an integer >= 2, got {q!r}")
    if R_AM < 1:
        raise PasError(f"R_AM must be >= 1, got {R_AM}")
    if not 0 < R_DM <= 1:
        raise PasError(f"R_DM must lie in (0, 1], got {R_DM}")


def plan_rates(q: int, R_AM: float, R_DM: float, r: float, family: str = "auto") -> PasPlan:
    """Complete rate tuple given the matcher rate and the uncoded split ratio.

    The code rate follows from compatibility:
    ``R_C = R_AM/(1+R_AM) * (1 + r/(1-r) * R_DM)``.
    """
    _check_common(q, R_AM, R_DM)
    if not 0 <= r < 1:
        raise PasError(f"split ratio r must lie in [0, 1), got {r}")
    R_C = R_AM / (1.0 + R_AM) * (1.0 + r / (1.0 - r) * R_DM)
    if not 0 < R_C < 1:
        raise PasError(f"incompatible rates: R_C = {R_C:.6g} violates 0 < R_C < 1")
    fam = _family(q, family)
    R_T = _total_rate(R_C, R_AM, R_DM)
    return PasPlan(int(q), float(R_AM), float(R_DM), float(R_C), float(r), R_T, _bits(q, R_T, fam), fam)


def split_for(q: int, R_AM: float, R_DM: float, R_C: float, family: str = "auto") -> PasPlan:
    """Split ratio that makes a given code rate compatible, and the resulting plan."""
    _check_common(q, R_AM, R_DM)
    if not 0 < R_C < 1:
        raise PasError(f"code rate must lie in (0, 1), got {R_C}")
    lo = min_code_rate(R_AM)
    if R_C < lo - 1e-15:
        raise PasError(f"incompatible rates: R_C = {R_C:.6g} below R_AM/(1+R_AM) = {lo:.6g}")
    r = 1.0 - R_AM * R_DM / _total_rate(R_C, R_AM, R_DM)
    r = max(r, 0.0)
    if not r < 1:
        raise PasError(f"incompatible rates: split ratio r = {r:.6g} not below 1")
    fam = _family(q, family)
    R_T = _total_rate(R_C, R_AM, R_DM)
    return PasPlan(int(q), float(R_AM), float(R_DM), float(R_C), float(r), R_T, _bits(q, R_T, fam), fam)


# ---------------------------------------------------------------------------
# compositions and the distribution matcher

@dataclass(frozen=True)
class Composition:
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 0 for c in counts) or sum(counts) == 0:
            raise PasError("composition needs non-negative counts with a positive total")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def probs(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n

    def __len__(self):
        return len(self.counts)


def kl_bits(p, target) -> float:
    """Kullback-Leibler divergence D(p || target) in bits."""
    p = np.asarray(p, dtype=float)
    t = np.asarray(target, dtype=float)
    m = p > 0
    if np.any(t[m] <= 0):
        return math.inf
    return float(np.sum(p[m] * np.log2(p[m] / t[m])))


def quantize_composition(target, n: int) -> Composition:
    """n-type closest to ``target`` by largest-remainder rounding."""
    t = np.asarray(target, dtype=float)
    if t.ndim != 1 or np.any(t < 0) or not t.sum() > 0:
        raise PasError("target must be a non-negative probability vector")
    t = t / t.sum()
    if n < t.size:
        raise PasError(f"block length n={n} shorter than the {t.size} classes")
    ideal = n * t
    counts = np.floor(ideal).astype(np.int64)
    rest = n - int(counts.sum())
    # stable sort: ties go to the lower class index
    order = np.argsort(-(ideal - counts), kind="stable")
    counts[order[:rest]] += 1
    return Composition(tuple(int(c) for c in counts))


def _multinomial(counts) -> int:
    total, out = 0, 1
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def ccdm_input_bits(comp: Composition) -> int:
    """floor(log2 of the number of sequences with this composition)."""
    return _multinomial(comp.counts).bit_length() - 1


def _bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def _int_to_bits(v: int, k: int) -> np.ndarray:
    return np.array([(v >> (k - 1 - i)) & 1 for i in range(k)], dtype=np.uint8)


def ccdm_encode(bits, comp: Composition) -> np.ndarray:
    """Map ``ccdm_input_bits(comp)`` bits to a sequence of exactly that composition.

    Arithmetic decoding of the input with the adaptive model ``P(a) = c_a/n_rem``
    (remaining symbol counts).  All interval arithmetic is exact: the input word
    ``v`` is the point ``(2v+1)/2^(k+1)`` of the unit interval, and every
    sub-interval width is an integer multiple of ``1/T`` (T = number of
    sequences), so no rounding ever occurs.
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = ccdm_input_bits(comp)
    if bits.size != k:
        raise PasError(f"matcher expects {k} input bits, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise PasError("input must be bits")
    counts = list(comp.counts)
    n_rem = comp.n
    width = _multinomial(counts)
    target = (2 * _bits_to_int(bits) + 1) * width   # in units of 1 / (T * 2^(k+1))
    scale = 1 << (k + 1)
    low = 0
    out = np.empty(comp.n, dtype=np.int64)
    for pos in range(comp.n):
        for a, ca in enumerate(counts):
            if ca == 0:
                continue
            sub = width * ca // n_rem
            if target < (low + sub) * scale:
                break
            low += sub
        out[pos] = a
        width = sub
        counts[a] -= 1
        n_rem -= 1
    return out


def ccdm_decode(symbols, comp: Composition) -> np.ndarray:
    """Inverse of :func:`ccdm_encode` (arithmetic encoding of the sequence)."""
    sym = np.asarray(symbols, dtype=np.int64).ravel()
    if sym.size != comp.n:
        raise PasError(f"expected {comp.n} symbols, got {sym.size}")
    if np.any((sym < 0) | (sym >= len(comp))) or tuple(np.bincount(sym, minlength=len(comp))) != comp.counts:
        raise PasError("symbol sequence does not have the declared composition")
    counts = list(comp.counts)
    n_rem = comp.n
    T = _multinomial(counts)
    width = T
    low = 0
    for a in sym:
        for b in range(a):
            low += width * counts[b] // n_rem
        width = width * counts[a] // n_rem
        counts[a] -= 1
        n_rem -= 1
    k = ccdm_input_bits(comp)
    num = low << (k + 1)
    v = -((T - num) // (2 * T))
    if not (0 <= v < (1 << k) and (2 * v + 1) * T < (low + 1) << (k + 1)):
        raise PasError("sequence is not produced by the matcher")
    return _int_to_bits(v, k)


# ---------------------------------------------------------------------------
# mapping

def fundamental_points(c: Constellation) -> np.ndarray:
    """Points of the fundamental sector, ordered by modulus (amplitude index order)."""
    return c.points[fundamental_set(c)]


def _index_table(c: Constellation):
    """Constellation index for every (amplitude, region) pair, shape (|B|, q)."""
    base = fundamental_points(c)
    rot = base[:, None] * np.exp(2j * np.pi * np.arange(c.q) / c.q)[None, :]
    dist = np.abs(rot[..., None] - c.points[None, None, :])
    table = dist.argmin(axis=-1)
    if np.any(dist.min(axis=-1) > 1e-9) or np.unique(table).size != len(c):
        raise PasError(f"{c.name!r} is not generated by rotating its fundamental sector")
    return table


def pas_map_indices(amplitude_indices, region_symbols, c: Constellation) -> np.ndarray:
    a = np.asarray(amplitude_indices, dtype=np.int64)
    s = np.asarray(region_symbols, dtype=np.int64)
    if a.shape != s.shape:
        raise PasError("amplitude and region sequences differ in length")
    table = _index_table(c)
    if a.size and (a.min() < 0 or a.max() >= table.shape[0]):
        raise PasError(f"amplitude index out of range [0, {table.shape[0]})")
    if s.size and (s.min() < 0 or s.max() >= c.q):
        raise PasError(f"region symbol out of range [0, {c.q})")
    return table[a, s]


def pas_map(amplitude_indices, region_symbols, c: Constellation) -> np.ndarray:
    """Channel symbols ``exp(2j*pi*s/q) * b_a``: region ``s`` rotates fundamental point ``a``."""
    a = np.asarray(amplitude_indices, dtype=np.int64)
    s = np.asarray(region_symbols, dtype=np.int64)
    pas_map_indices(a, s, c)
    return fundamental_points(c)[a] * np.exp(2j * np.pi * s / c.q)


def pas_demap_hard(points, c: Constellation):
    """Nearest-point decision followed by (amplitude, region) decomposition."""
    y = np.asarray(points, dtype=complex).ravel()
    table = _index_table(c)
    inv_a = np.empty(len(c), dtype=np.int64)
    inv_s = np.empty(len(c), dtype=np.int64)
    aa, ss = np.meshgrid(np.arange(table.shape[0]), np.arange(c.q), indexing="ij")
    inv_a[table.ravel()] = aa.ravel()
    inv_s[table.ravel()] = ss.ravel()
    idx = np.abs(y[:, None] - c.points[None, :]).argmin(axis=1)
    return inv_a[idx], inv_s[idx]


# ---------------------------------------------------------------------------
# framing

@dataclass
class PasFrame:
    points: np.ndarray
    amplitudes: np.ndarray
    regions: np.ndarray
    plan: PasPlan
    meta: dict = field(default_factory=dict)


def _symbols_from_bits(bits: np.ndarray, k: int) -> np.ndarray:
    b = bits.reshape(-1, k)
    return b @ (1 << np.arange(k - 1, -1, -1))


def _bits_from_symbols(sym: np.ndarray, k: int) -> np.ndarray:
    return ((sym[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8).ravel()


def frame_layout(plan: PasPlan, c: Constellation, comp: Composition) -> dict:
    """Integer frame geometry for a plan and a matcher composition.

    N is fixed by the composition; the matcher consumes ``dm_bits`` payload
    bits, and ``floor(r/(1-r) * dm_bits / log2 q)`` uncoded region symbols carry
    the split fraction.  The effective rates then satisfy
    ``N * R_DM * R_AM * log2(q) == (1 - r) * M_bits == dm_bits`` exactly.
    """
    if plan.q not in FRAMING_Q:
        raise PasError(f"framing supports q in {FRAMING_Q}, got {plan.q}")
    if c.q != plan.q:
        raise PasError(f"plan alphabet q={plan.q} but constellation symmetry q={c.q}")
    n_fund = fundamental_set(c).size
    if len(comp) != n_fund:
        raise PasError(f"composition has {len(comp)} classes, fundamental set has {n_fund}")
    k = int(round(math.log2(plan.q)))
    R_AM = math.log(n_fund, plan.q)
    if abs(R_AM - plan.R_AM) > 1e-9:
        raise PasError(f"plan R_AM={plan.R_AM} but constellation gives {R_AM:.6g}")
    N = comp.n
    dm_bits = ccdm_input_bits(comp)
    if plan.r > 0:
        info_symbols = min(N, int(math.floor(plan.r / (1 - plan.r) * dm_bits / k + 1e-9)))
    else:
        info_symbols = 0
    M_bits = dm_bits + info_symbols * k
    return {"q": plan.q, "N": N, "bits_per_symbol": k, "dm_bits": dm_bits,
            "info_region_symbols": info_symbols, "parity_symbols": N - info_symbols,
            "M_bits": M_bits, "R_AM": R_AM}


def _effective_plan(plan: PasPlan, lay: dict, padding: int) -> PasPlan:
    k, N = lay["bits_per_symbol"], lay["N"]
    R_DM = lay["dm_bits"] / (N * lay["R_AM"] * k)
    r = lay["info_region_symbols"] * k / lay["M_bits"] if lay["M_bits"] else 0.0
    R_C = (N * lay["R_AM"] + lay["info_region_symbols"]) / (N * (1 + lay["R_AM"]))
    R_T = _total_rate(R_C, lay["R_AM"], R_DM)
    return PasPlan(plan.q, lay["R_AM"], R_DM, R_C, r, R_T, _bits(plan.q, R_T, plan.family),
                   plan.family, M=lay["M_bits"] / k, N=N, padding_bits=padding)


def pas_frame(payload_bits, plan: PasPlan, c: Constellation, comp: Composition,
              seed: int = 0) -> PasFrame:
    """Assemble one PAS frame of ``comp.n`` channel symbols.

    The payload is split into the matcher part (first ``dm_bits``) and the
    uncoded region part; a short payload is zero-padded and the padding
    recorded.  Parity symbols are drawn uniformly from a generator seeded with
    ``seed``.
    """
    bits = np.asarray(payload_bits, dtype=np.uint8).ravel()
    lay = frame_layout(plan, c, comp)
    k = lay["bits_per_symbol"]
    if bits.size > lay["M_bits"]:
        raise PasError(f"payload of {bits.size} bits exceeds frame capacity {lay['M_bits']}")
    padding = lay["M_bits"] - bits.size
    bits = np.concatenate([bits, np.zeros(padding, dtype=np.uint8)])
    amps = ccdm_encode(bits[:lay["dm_bits"]], comp)
    info = _symbols_from_bits(bits[lay["dm_bits"]:], k) if lay["info_region_symbols"] else np.zeros(0, np.int64)
    parity = np.random.default_rng(seed).integers(0, plan.q, lay["parity_symbols"])
    regions = np.concatenate([info, parity]).astype(np.int64)
    pts = pas_map(amps, regions, c)
    eff = _effective_plan(plan, lay, padding)
    meta = dict(lay, padding_bits=padding, seed=int(seed), requested_r=plan.r, requested_R_DM=plan.R_DM)
    return PasFrame(pts, amps, regions, eff, meta)


def pas_deframe(points, c: Constellation, comp: Composition, meta: dict) -> np.ndarray:
    """Recover the payload bits from noiseless (or hard-decided) frame symbols."""
    amps, regions = pas_demap_hard(points, c)
    bits = ccdm_decode(amps, comp)
    n_info = meta["info_region_symbols"]
    if n_info:
        bits = np.concatenate([bits, _bits_from_symbols(regions[:n_info], meta["bits_per_symbol"])])
    return bits[: bits.size - meta["padding_bits"]]


def frame_to_bytes(frame: PasFrame) -> bytes:
    """Binary layout: little-endian header then (amplitude, region) uint16 pairs.

    Header fields: magic "PASF", version u8, q u8, reserved u16, N u32,
    M_bits u32, dm_bits u32, info_region_symbols u32, padding_bits u32, seed u64.
    """
    m = frame.meta
    head = _HEADER.pack(FRAME_MAGIC, FRAME_VERSION, m["q"], 0, m["N"], m["M_bits"], m["dm_bits"],
                        m["info_region_symbols"], m["padding_bits"], m["seed"])
    pairs = np.empty((frame.amplitudes.size, 2), dtype="<u2")
    pairs[:, 0] = frame.amplitudes
    pairs[:, 1] = frame.regions
    return head + pairs.tobytes()


def frame_from_bytes(blob: bytes):
    """Parse :func:`frame_to_bytes` output into ``(header dict, amplitudes, regions)``."""
    if len(blob) < _HEADER.size:
        raise PasError("truncated frame header")
    magic, ver, q, _, N, M_bits, dm_bits, n_info, pad, seed = _HEADER.unpack_from(blob)
    if magic != FRAME_MAGIC or ver != FRAME_VERSION:
        raise PasError("not a PAS frame (bad magic or version)")
    body = np.frombuffer(blob, dtype="<u2", offset=_HEADER.size)
    if body.size != 2 * N:
        raise PasError(f"frame body holds {body.size // 2} symbols, header says {N}")
    pairs = body.reshape(N, 2).astype(np.int64)
    head = {"q": q, "N": N, "M_bits": M_bits, "dm_bits": dm_bits, "info_region_symbols": n_info,
            "padding_bits": pad, "seed": seed, "bits_per_symbol": int(round(math.log2(q)))}
    return head, pairs[:, 0], pairs[:, 1]
