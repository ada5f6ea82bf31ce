"""AWGN transmission and a cubic-nonlinearity link model with reach curves.

The nonlinear interference of a long-haul link is treated as extra Gaussian
noise growing with the cube of launch power.  Its coefficient depends on the
format through the fourth standardized moment:

    eta_eff = spans**exponent * (eta0 + eta_moment_slope * (mu4 - 2))

where ``mu4 = 2`` is the circular Gaussian reference value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .constellation import Constellation, FigureReport, measure
from .shaping import LAMBDA_RANGE, golden_section_max, mb_weights
from . import rates

__all__ = [
    "LinkError",
    "LinkModel",
    "ReachPoint",
    "awgn_transmit",
    "empirical_snr_db",
    "effective_eta",
    "effective_snr",
    "optimal_launch",
    "optimal_launch_numeric",
    "reach_curve",
    "reach_to_csv",
    "load_link_model",
]

MU4_GAUSS = 2.0


class LinkError(ValueError):
    pass


@dataclass(frozen=True)
class LinkModel:
    """Per-span noise parameters in normalized power units.

    Defaults: one span of 80 km, unit ASE, eta0 = 1e-3, no moment dependence,
    incoherent accumulation (exponent 1).
    """

    spans: int = 1
    ase_per_span: float = 1.0
    eta0: float = 1e-3
    eta_moment_slope: float = 0.0
    span_km: float = 80.0
    accumulation_exponent: float = 1.0

    def __post_init__(self):
        if int(self.spans) != self.spans or self.spans < 1:
            raise LinkError(f"spans must be an integer >= 1, got {self.spans!r}")
        object.__setattr__(self, "spans", int(self.spans))
        for name in ("ase_per_span", "eta0", "span_km", "accumulation_exponent"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise LinkError(f"{name} must be finite and non-negative, got {v!r}")
        if not np.isfinite(self.eta_moment_slope):
            raise LinkError("eta_moment_slope must be finite")

    @property
    def ase_total(self) -> float:
        return self.spans * self.ase_per_span

    def with_spans(self, spans: int) -> "LinkModel":
        return replace(self, spans=spans)


def load_link_model(source: Union[str, Path]) -> LinkModel:
    """Read a model from a JSON object or ``key = value`` lines (``#`` comments).

    ``source`` is a path if such a file exists, otherwise the text itself.
    Missing keys keep the :class:`LinkModel` defaults.
    """
    text = str(source)
    p = Path(text)
    try:
        if p.is_file():
            text = p.read_text()
    except OSError:
        pass
    known = {f.name: f.type for f in fields(LinkModel)}
    stripped = text.strip()
    if stripped.startswith("{"):
        raw = json.loads(stripped)
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise LinkError(f"line {n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            raw[k] = v
    unknown = set(raw) - set(known)
    if unknown:
        raise LinkError(f"unknown link model keys: {sorted(unknown)}")
    vals = {k: (int(float(v)) if k == "spans" else float(v)) for k, v in raw.items()}
    return LinkModel(**vals)


def awgn_transmit(points, snr_db: float, seed: int = 0) -> np.ndarray:
    """``y = sqrt(SNR) x + z`` with variance 1/2 per real noise dimension."""
    x = np.asarray(points, dtype=complex)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2,) + x.shape) * math.sqrt(0.5)
    return math.sqrt(rates.db2lin(snr_db)) * x + (z[0] + 1j * z[1])


def empirical_snr_db(sent, received, snr_db: float) -> float:
    """Moment estimate of the SNR from a transmitted/received pair."""
    x = np.asarray(sent, dtype=complex)
    y = np.asarray(received, dtype=complex)
    s = math.sqrt(rates.db2lin(snr_db))
    noise = np.mean(np.abs(y - s * x) ** 2)
    return 10 * math.log10(s * s * np.mean(np.abs(x) ** 2) / noise)


def effective_eta(model: LinkModel, report: FigureReport) -> float:
    per_span = model.eta0 + model.eta_moment_slope * (report.mu4 - MU4_GAUSS)
    if per_span < 0:
        raise LinkError(f"moment slope drives the nonlinear coefficient negative ({per_span:.3g})")
    return model.spans ** model.accumulation_exponent * per_span


def effective_snr(p_launch, model: LinkModel, report: FigureReport):
    p = np.asarray(p_launch, dtype=float)
    if np.any(p <= 0):
        raise LinkError("launch power must be positive")
    out = p / (model.ase_total + effective_eta(model, report) * p ** 3)
    return float(out) if out.ndim == 0 else out


def optimal_launch(model: LinkModel, report: FigureReport):
    """Closed-form optimum ``(p_opt, snr_opt)``; nonlinear noise is then half the ASE."""
    eta = effective_eta(model, report)
    if eta <= 0:
        raise LinkError("nonlinear coefficient is zero: SNR grows without bound in launch power")
    sigma2 = model.ase_total
    p = (sigma2 / (2.0 * eta)) ** (1.0 / 3.0)
    return p, p / (sigma2 + eta * p ** 3)


def optimal_launch_numeric(model: LinkModel, report: FigureReport, tol: float = 1e-10):
    """Golden-section search in log power around the scale ``(sigma2/eta)^(1/3)``."""
    eta = effective_eta(model, report)
    if eta <= 0:
        raise LinkError("nonlinear coefficient is zero: SNR grows without bound in launch power")
    centre = math.log((model.ase_total / eta) ** (1.0 / 3.0))
    u, _, _ = golden_section_max(lambda t: math.log(effective_snr(math.exp(t), model, report)),
                                 centre - 5.0, centre + 5.0, tol)
    p = math.exp(u)
    return p, effective_snr(p, model, report)


@dataclass(frozen=True)
class ReachPoint:
    spans: int
    distance_km: float
    p_opt: float
    snr_opt_db: float
    mi_bits: float
    lambda_opt: float

    @property
    def p_opt_dbm_norm(self) -> float:
        return 10.0 * math.log10(self.p_opt)


RateFn = Callable[[Constellation, float], float]


def reach_curve(c: Constellation, model: LinkModel, span_counts: Iterable[int],
                lam_step: float = 0.05, lam_range: Sequence[float] = LAMBDA_RANGE,
                rate_fn: Optional[RateFn] = None) -> list:
    """Optimum-SNR operating point per span count over an MB sweep.

    For every span count the MB parameter grid is searched for the profile with
    the highest optimum SNR (ties within 1e-12 relative go to the larger MI),
    and the rate is evaluated at that SNR.
    """
    fn = rate_fn or (lambda con, s: rates.cm_mi_quad(con, s))
    n = int(round((lam_range[1] - lam_range[0]) / lam_step))
    lams = np.round(lam_range[0] + lam_step * np.arange(n + 1), 12)
    profiles = [mb_weights(c, float(l)).constellation for l in lams]
    reports = [measure(p) for p in profiles]
    out = []
    for spans in span_counts:
        m = model.with_spans(int(spans))
        snrs = np.array([optimal_launch(m, r)[1] for r in reports])
        best = snrs.max()
        tied = np.flatnonzero(snrs >= best * (1 - 1e-12))
        snr_db = 10 * math.log10(best)
        mis = [fn(profiles[i], snr_db) for i in tied]
        k = int(tied[int(np.argmax(mis))])
        p_opt, snr_k = optimal_launch(m, reports[k])
        snr_k_db = 10 * math.log10(snr_k)
        mi = max(mis) if snr_k_db == snr_db else fn(profiles[k], snr_k_db)
        out.append(ReachPoint(m.spans, m.spans * m.span_km, p_opt, snr_k_db, mi, float(lams[k])))
    return out


def reach_to_csv(points: Sequence[ReachPoint]) -> str:
    lines = ["distance_km,p_opt_dbm_norm,snr_opt_db,mi_bits,lambda_opt"]
    for p in points:
        lines.append(",".join(format(v, ".17g") for v in
                              (p.distance_km, p.p_opt_dbm_norm, p.snr_opt_db, p.mi_bits, p.lambda_opt)))
    return "\n".join(lines) + "\n"
