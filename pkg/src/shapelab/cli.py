"""Batch command-line front end.

Every subcommand reads/writes plain files (JSON, CSV, SVG, binary frames) and
is deterministic given its flags.  Exit codes: 0 success, 2 usage error,
3 numeric or constraint failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import constellation as cst
from . import linksim, pas, rates, shaping

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _f17(x) -> str:
    return format(float(x), ".17g")


def _grid(text: str):
    """``a:b:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / step + 1e-9))
            return [round(a + i * step, 12) for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected a:b:step with step > 0 and b >= a") from None


def _int_range(text: str):
    return [int(round(v)) for v in _grid(text)]


def _write(path, data, binary=False):
    if path in (None, "-"):
        if binary:
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    Path(path).write_bytes(data) if binary else Path(path).write_text(data)


def _read_constellation(path) -> cst.Constellation:
    try:
        return cst.from_json(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read constellation {path!r}: {e.strerror}") from None


def _out(args, default=None):
    return getattr(args, "output", None) or args.out or default


def svg_scatter(c: cst.Constellation, size: int = 400) -> str:
    """Scatter plot with dot radius proportional to point probability."""
    pts = c.points
    lim = 1.1 * float(np.max(np.abs(np.concatenate([pts.real, pts.imag])))) or 1.0
    half = size / 2
    scale = half / lim
    rmax = 0.04 * size
    pmax = float(c.probs.max())
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<line x1="0" y1="{half:g}" x2="{size}" y2="{half:g}" stroke="#bbb"/>',
           f'<line x1="{half:g}" y1="0" x2="{half:g}" y2="{size}" stroke="#bbb"/>']
    for z, p in zip(pts, c.probs):
        out.append(f'<circle cx="{half + scale * z.real:.6f}" cy="{half - scale * z.imag:.6f}" '
                   f'r="{rmax * p / pmax:.6f}" fill="#1f4e9c"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def _apply_shaping(c, args):
    prof = None
    if args.stretch is not None:
        c = cst.stretch(c, args.stretch)
    if args.shape_entropy is not None:
        prof = shaping.lambda_for_entropy(c, args.shape_entropy)
    elif args.shape_lambda is not None:
        prof = shaping.mb_weights(c, args.shape_lambda)
    return (prof.constellation if prof else c), prof


def cmd_construct(args):
    k = args.kind
    if k in ("pam", "qam"):
        if args.m is None:
            raise UsageError(f"{k} needs --m")
        lim = 8 if k == "pam" else 4
        if not 1 <= args.m <= lim:
            raise UsageError(f"--m must lie in [1, {lim}] for {k}")
        c = cst.make_pam(args.m) if k == "pam" else cst.make_square_qam(args.m)
    else:
        if args.q is None or args.q < 2:
            raise UsageError(f"{k} needs --q >= 2 (got {args.q})")
        if k == "cqam-star":
            if args.shell_gap is not None and args.shell_gap <= 0:
                raise UsageError("--shell-gap must be > 0")
            c = cst.make_cqam_star(args.q, args.shell_gap)
        elif k == "cqam-greedy":
            c = cst.make_cqam_greedy(args.q, args.phase_grid)
        elif k == "cqam-2dist":
            c = cst.make_cqam_two_dist(args.q, args.phase_grid)
        else:
            c = cst.make_cqam_hybrid(args.q)
    if args.gray:
        c = cst.gray_label_star(c)
    c, prof = _apply_shaping(c, args)
    extra = {"entropy": float(_f17(c.entropy))}
    if prof is not None:
        extra["lambda"] = float(_f17(prof.lam))
    _write(_out(args), cst.to_json(c, **extra) + "\n")
    if args.svg:
        _write(args.svg, svg_scatter(c))


def cmd_shape(args):
    c = _read_constellation(args.input)
    if args.entropy is not None:
        prof = shaping.lambda_for_entropy(c, args.entropy)
    elif args.lam is not None:
        prof = shaping.mb_weights(c, args.lam)
    elif args.optimize_snr is not None:
        prof = shaping.optimize_lambda_for_mi(c, args.optimize_snr, rate=args.rate, order=args.order)
    else:
        raise UsageError("shape needs one of --entropy, --lambda, --optimize-snr")
    out = _out(args)
    _write(out, cst.to_json(prof.constellation, entropy=float(_f17(prof.entropy_bits)),
                            **{"lambda": float(_f17(prof.lam))}) + "\n")
    if out not in (None, "-"):
        _write(str(Path(out).with_suffix("")) + ".shaping.json", prof.sidecar() + "\n")
    if args.svg:
        _write(args.svg, svg_scatter(prof.constellation))


def cmd_rates(args):
    c = _read_constellation(args.input)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    bad = set(metrics) - {"cm", "scm", "bcm"}
    if bad:
        raise UsageError(f"unknown metrics {sorted(bad)}")
    if "scm" in metrics and c.symbolic is None:
        raise UsageError("metric scm needs symbolic labels, none in input")
    if "bcm" in metrics and c.binary is None:
        raise UsageError("metric bcm needs binary labels, none in input")
    curve = rates.rate_curve(c, _grid(args.snr), metrics, args.method, args.order, args.samples,
                             args.seed, shaping=str(c.meta.get("mb_lambda", "")))
    _write(_out(args), curve.to_csv())


def cmd_pas_plan(args):
    if args.r is None and args.rc is None:
        raise UsageError("pas-plan needs --r or --rc")
    ram = args.ram if args.ram is not None else 1.0
    if args.r is not None:
        plan = pas.plan_rates(args.q, ram, args.rdm, args.r, args.family)
    else:
        plan = pas.split_for(args.q, ram, args.rdm, args.rc, args.family)
    _write(_out(args), plan.to_json() + "\n")


def cmd_pas_frame(args):
    c = _read_constellation(args.constellation)
    B = cst.fundamental_set(c)
    R_AM = math.log(B.size, c.q)
    plan = pas.plan_rates(c.q, R_AM, args.rdm, args.r, args.family)
    target = c.probs[B] / c.probs[B].sum()
    comp = pas.quantize_composition(target, args.n)
    lay = pas.frame_layout(plan, c, comp)
    if args.payload:
        raw = np.frombuffer(Path(args.payload).read_bytes(), dtype=np.uint8)
        bits = np.unpackbits(raw)[: lay["M_bits"]]
    else:
        bits = np.random.default_rng(args.seed).integers(0, 2, lay["M_bits"], dtype=np.uint8)
    frame = pas.pas_frame(bits, plan, c, comp, seed=args.seed + 1)
    out = _out(args, "frame.bin")
    _write(out, pas.frame_to_bytes(frame), binary=True)
    meta = dict(frame.meta, composition=list(comp.counts),
                plan=json.loads(frame.plan.to_json()))
    meta_path = args.meta or (str(Path(out).with_suffix("")) + ".json")
    _write(meta_path, json.dumps(meta, indent=1) + "\n")


def cmd_transmit(args):
    c = _read_constellation(args.constellation)
    if args.frame:
        head, amps, regions = pas.frame_from_bytes(Path(args.frame).read_bytes())
        if head["q"] != c.q:
            raise UsageError(f"frame alphabet q={head['q']} does not match constellation q={c.q}")
        idx = pas.pas_map_indices(amps, regions, c)
    else:
        if args.n is None or args.n < 1:
            raise UsageError("transmit needs --frame or --n >= 1")
        idx = np.random.default_rng(args.seed).choice(len(c), size=args.n, p=c.probs)
    y = linksim.awgn_transmit(c.points[idx], args.snr, seed=args.seed + 1)
    lines = ["index,sent_re,sent_im,recv_re,recv_im"]
    for i, yy in zip(idx, y):
        x = c.points[i]
        lines.append(",".join([str(int(i)), _f17(x.real), _f17(x.imag), _f17(yy.real), _f17(yy.imag)]))
    _write(_out(args), "\n".join(lines) + "\n")


def cmd_reach(args):
    c = _read_constellation(args.format)
    model = linksim.load_link_model(args.config) if args.config else linksim.LinkModel()
    pts = linksim.reach_curve(c, model, _int_range(args.spans), lam_step=args.lambda_step,
                              rate_fn=lambda con, s: rates.cm_mi_quad(con, s, args.order))
    _write(_out(args), linksim.reach_to_csv(pts))


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, default):
        # subcommand copies suppress their defaults so a flag given before the
        # subcommand is not overwritten
        d = (lambda v: v) if default else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=d(0), help="RNG seed (default 0)")
        parser.add_argument("--threads", type=int, default=d(None),
                            help="cap on numeric library threads (sets OMP/BLAS env vars)")
        parser.add_argument("--out", default=d(None), help="output path (default stdout)")

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, default=False)

    p = argparse.ArgumentParser(prog="shapelab", description="Constellation shaping toolkit")
    global_flags(p, default=True)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("-o", "--output", default=None, help="output path (overrides --out)")
        sp.set_defaults(func=fn)
        return sp

    sp = add("construct", cmd_construct, "build a constellation")
    sp.add_argument("kind", choices=["pam", "qam", "cqam-star", "cqam-greedy", "cqam-2dist", "cqam-hybrid"])
    sp.add_argument("--q", type=int)
    sp.add_argument("--m", type=int, help="bits per PAM axis")
    sp.add_argument("--shell-gap", type=float)
    sp.add_argument("--phase-grid", type=int, default=256)
    sp.add_argument("--gray", action="store_true", help="attach ring/phase Gray bit labels (8x8 CQAM)")
    sp.add_argument("--stretch", type=float)
    sp.add_argument("--shape-entropy", type=float)
    sp.add_argument("--shape-lambda", type=float)
    sp.add_argument("--svg")

    sp = add("shape", cmd_shape, "apply MB shaping to a constellation file")
    sp.add_argument("input")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--entropy", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--optimize-snr", type=float)
    sp.add_argument("--rate", choices=["cm", "scm", "bcm"], default="cm")
    sp.add_argument("--order", type=int, default=48)
    sp.add_argument("--svg")

    sp = add("rates", cmd_rates, "rate curve CSV")
    sp.add_argument("input")
    sp.add_argument("--snr", default="0:20:1", help="a:b:step in dB")
    sp.add_argument("--metrics", default="cm")
    sp.add_argument("--method", choices=["quad", "mc"], default="quad")
    sp.add_argument("--order", type=int, default=48)
    sp.add_argument("--samples", type=int, default=10 ** 6)

    sp = add("pas-plan", cmd_pas_plan, "PAS rate plan JSON")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--rdm", type=float, required=True)
    sp.add_argument("--ram", type=float, help="region-labeling rate (default 1)")
    sp.add_argument("--r", type=float)
    sp.add_argument("--rc", type=float)
    sp.add_argument("--family", choices=["auto", "cqam", "pam2"], default="auto")

    sp = add("pas-frame", cmd_pas_frame, "build one PAS frame")
    sp.add_argument("constellation")
    sp.add_argument("--n", type=int, default=1000, help="frame length in symbols")
    sp.add_argument("--r", type=float, default=0.0)
    sp.add_argument("--rdm", type=float, default=1.0, help="nominal matcher rate for the plan")
    sp.add_argument("--family", choices=["auto", "cqam", "pam2"], default="auto")
    sp.add_argument("--payload", help="payload file (bytes, MSB first); random if omitted")
    sp.add_argument("--meta", help="metadata JSON path (default <out>.json)")

    sp = add("transmit", cmd_transmit, "send symbols over AWGN")
    sp.add_argument("constellation")
    sp.add_argument("--snr", type=float, required=True)
    sp.add_argument("--frame", help="binary frame from pas-frame")
    sp.add_argument("--n", type=int, help="number of i.i.d. symbols when no frame is given")

    sp = add("reach", cmd_reach, "optimum-SNR reach curve CSV")
    sp.add_argument("--format", required=True, help="constellation JSON")
    sp.add_argument("--config", help="link model file (key = value or JSON)")
    sp.add_argument("--spans", default="10:60:10", help="span counts a:b:step")
    sp.add_argument("--lambda-step", type=float, default=0.05)
    sp.add_argument("--order", type=int, default=48)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        args.func(args)
    except UsageError as e:
        print(f"shapelab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (cst.ConstructionError, shaping.ShapingError, rates.RateError, pas.PasError,
            linksim.LinkError, ValueError, ArithmeticError) as e:
        print(f"shapelab: error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
