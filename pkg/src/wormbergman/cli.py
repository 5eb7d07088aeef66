"""Command-line harness: one subcommand per experiment, CSV output plus a JSON sidecar.

Exit status is 0 on success, 1 when the configuration is invalid and 2 when
a numerical check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, PreconditionError, ToleranceError
from .params import ModeIndex, WormParams

SUBCOMMANDS = ("pseudoconvexity", "weight", "poles", "kernel", "reproduce", "blowup", "scaling", "calibrate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are validation errors
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _grid(text: str) -> list[float]:
    """``lo:hi:step`` inclusive, or a comma list."""
    if ":" in text:
        lo, hi, step = (float(v) for v in text.split(":"))
        if step <= 0 or hi < lo:
            raise PreconditionError(f"bad grid {text!r}")
        count = int(round((hi - lo) / step))
        return [round(lo + i * step, 10) for i in range(count + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


@dataclass
class RunConfig:
    subcommand: str
    params: WormParams
    mode: ModeIndex
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    dry_run: bool = False
    options: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "params": {
                "alpha": self.params.alpha,
                "beta": self.params.beta,
                "m_amp": self.params.smoothing_m,
                "n": self.params.dim,
                "nu": self.params.nu,
                "mu": self.params.mu,
            },
            "mode": {"j": list(self.mode.j_multi), "k": self.mode.k},
            "seed": self.seed,
            "tol": self.tol,
            "out": self.out,
            "options": self.options,
        }


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# experiments


def _pseudoconvexity(cfg: RunConfig, plan: bool):
    from .geometry import pseudoconvexity_scan

    count = cfg.options["samples"]
    if plan:
        cfg.params.require_bounded()
        return {"samples": count, "bisection_max_iter": 200}
    rep = pseudoconvexity_scan(cfg.params, count, cfg.seed)
    nz = rep.near_zero
    summary = {
        "global_min": rep.global_min,
        "near_zero_count": int(nz.size),
        "max_distance_near_zero": float(rep.distances[nz].max()) if nz.size else None,
        "max_abs_residual": float(np.abs(rep.residuals).max()),
    }
    return Table(rep.header(), list(rep.rows()), summary)


def _weight(cfg: RunConfig, plan: bool):
    from .weight import TRANSFORM_COLUMNS, WeightSpec, transform_table

    xis = _grid(cfg.options["xi_grid"])
    spec = WeightSpec.build(cfg.mode, cfg.params)
    if plan:
        return {"points": len(xis), "cos_power": spec.cos_power}
    return Table(TRANSFORM_COLUMNS, transform_table(xis, spec), {"support": list(spec.support())})


def _poles(cfg: RunConfig, plan: bool):
    from .poles import POLE_COLUMNS, Region, poles_numeric, poles_predicted

    region = Region.parse(cfg.options["region"])
    pred = poles_predicted(cfg.mode, cfg.params, region)
    if plan:
        return {"predicted": pred.count, "contour_nodes": 4096}
    num = poles_numeric(cfg.mode, cfg.params, region, tol=cfg.tol or 1e-8)
    dev = max((abs(a - b) for a, b in zip(pred.locations(), num.locations())), default=0.0)
    summary = {"predicted_count": pred.count, "contour_count": num.contour_count, "max_deviation": dev}
    return Table(POLE_COLUMNS, list(num.rows()), summary)


def _kernel(cfg: RunConfig, plan: bool):
    from .kernel import KERNEL_COLUMNS, KernelEvalConfig, StripKernel
    from .poles import residue_series

    p = cfg.params
    w = complex(cfg.options["w"]) if cfg.options["w"] else 1j * p.alpha * p.log_beta
    zim = cfg.options["z_im"] if cfg.options["z_im"] is not None else p.alpha * p.log_beta
    xs = _grid(cfg.options["x_grid"])
    Z = np.array(xs) + 1j * zim
    X = Z - np.conj(w)
    ker = StripKernel(cfg.mode, p, KernelEvalConfig(tol=cfg.tol or 1e-12))
    if plan:
        xi, _ = ker.nodes(X)
        return {"points": len(xs), "nodes": int(xi.size), "truncation": [float(xi.real.min()), float(xi.real.max())]}
    K, err = ker.evaluate(X, with_error=True)
    tol = ker.cfg.tol
    if np.any(err > tol * np.maximum(1.0, np.abs(K))):
        raise ToleranceError(f"quadrature error estimate {float(err.max()):.3g} exceeds tol {tol:g}")
    exp = residue_series(cfg.mode, p)
    R = exp.evaluate(X)
    rows = []
    for z, k, e, r in zip(Z, K, err, R):
        rows.append([z.real, z.imag, w.real, w.imag, k.real, k.imag, "quad", float(e)])
        rows.append([z.real, z.imag, w.real, w.imag, r.real, r.imag, "residue", float(abs(k - r))])
    summary = {"next_pole_depth": exp.next_depth, "winding_exponent": [exp.winding_term.exponent.real, exp.winding_term.exponent.imag]}
    return Table(KERNEL_COLUMNS, rows, summary)


def _strip_points(p: WormParams) -> list[complex]:
    top = p.strip_top
    mid = 0.5 * (top - math.pi / 2)
    return [1 + 1j * p.alpha * p.log_beta, 0.3j, -0.5 + 1j * mid * 1.5, 0.7 - 1.2j, 1.2 + 1j * (top - 0.3)]


def _reproduce(cfg: RunConfig, plan: bool, calibrate: bool = False):
    from .kernel import GaussianTest, StripPoint, reproducing_check
    from .poles import KERNEL_PREFACTOR

    p = cfg.params
    f = GaussianTest(complex(cfg.options["center"]), cfg.options["scale"])
    pts = _strip_points(p)
    if plan:
        return {"points": len(pts), "trunc_x": f.truncation(), "y_nodes": 200}
    rows, worst = [], 0.0
    for wz in pts:
        r = reproducing_check(f, StripPoint(wz, p), cfg.mode, p)
        worst = max(worst, r.rel_error)
        if calibrate:
            ratio = r.value / r.expected
            rows.append([wz.real, wz.imag, ratio.real, ratio.imag, r.rel_error])
        else:
            rows.append([wz.real, wz.imag, r.value.real, r.value.imag, r.expected.real, r.expected.imag, r.rel_error])
    summary = {"max_rel_error": worst, "kernel_prefactor": KERNEL_PREFACTOR}
    if calibrate:
        ratios = np.array([complex(r[2], r[3]) for r in rows])
        mean = complex(ratios.mean())
        summary["mean_ratio"] = [mean.real, mean.imag]
        # prefactor that would make the mean ratio exactly 1
        summary["calibrated_prefactor"] = KERNEL_PREFACTOR / abs(mean)
        return Table(["w_re", "w_im", "ratio_re", "ratio_im", "rel_error"], rows, summary)
    cols = ["w_re", "w_im", "value_re", "value_im", "expected_re", "expected_im", "rel_error"]
    return Table(cols, rows, summary)


def _blowup(cfg: RunConfig, plan: bool):
    from .blowup import FAR, NEAR, SCAN_COLUMNS, LEADING, SERIES, ProbeRegion, default_eps_grid, divergence_scan, threshold_and_range

    p = cfg.params
    region = ProbeRegion.default(p, cfg.options["delta"])
    ps = _grid(cfg.options["p"])
    if cfg.options["s"] is not None:
        ss = [cfg.options["s"]]
    else:
        ss = _grid(cfg.options["s_grid"])
    eps = _grid(cfg.options["eps_grid"]) if cfg.options["eps_grid"] else default_eps_grid(region)
    sides = {"near": (NEAR,), "far": (FAR,), "both": (NEAR, FAR)}[cfg.options["side"]]
    kern = SERIES if cfg.options["kernel"] == "series" else LEADING
    if plan:
        return {"pairs": len(ps) * len(ss), "eps": eps, "sides": list(sides), "nodes_per_octave": 12}
    res = divergence_scan(ps, ss, p, region, eps, use_kernel=kern, sides=sides)
    rows = [[r.p, r.s, r.s_star, r.eps, r.integral, r.slope, r.label, r.r_squared, r.side] for r in res.rows]
    summary = {
        "boundary": {str(pp): res.boundary(pp) for pp in ps},
        "s_star": {str(pp): threshold_and_range(pp, p).s_star for pp in ps},
        "lp_range": threshold_and_range(ps[0], p).lp_range,
        "delta": region.delta,
    }
    return Table(SCAN_COLUMNS, rows, summary)


def _scaling(cfg: RunConfig, plan: bool):
    from .geometry import scaling_residuals

    lams = _grid(cfg.options["lambdas"])
    count = cfg.options["samples"]
    if plan:
        return {"points": count, "lambdas": lams}
    rows = scaling_residuals(cfg.params, lams, count, cfg.seed)
    table = [[r.index, r.lam, r.r_lambda, r.r_limit, r.predicted, r.abs_error] for r in rows]
    return Table(
        ["index", "lambda", "r_lambda", "r_inf", "predicted", "abs_error"],
        table,
        {"max_abs_error": max(r.abs_error for r in rows)},
    )


RUNNERS = {
    "pseudoconvexity": _pseudoconvexity,
    "weight": _weight,
    "poles": _poles,
    "kernel": _kernel,
    "reproduce": _reproduce,
    "blowup": _blowup,
    "scaling": _scaling,
    "calibrate": lambda cfg, plan: _reproduce(cfg, plan, calibrate=True),
}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=4)
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--beta", type=float, default=math.e)
    common.add_argument("--m-amp", type=float, default=20.0)
    common.add_argument("--j", type=str, default=None, help="comma-separated multi-index (default zeros)")
    common.add_argument("--k", type=int, default=-2)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", type=str, default=None, help="CSV path; the JSON sidecar sits next to it")
    common.add_argument("--dry-run", action="store_true")

    parser = _Parser(prog="wormbergman", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("pseudoconvexity", parents=[common])
    s.add_argument("--samples", type=int, default=10_000)

    s = sub.add_parser("weight", parents=[common])
    s.add_argument("--xi-grid", default="-20:20:0.25")

    s = sub.add_parser("poles", parents=[common])
    s.add_argument("--region", default="-3,3,-3,3")

    s = sub.add_parser("kernel", parents=[common])
    s.add_argument("--w", default=None, help="strip point w as a Python complex literal")
    s.add_argument("--z-im", type=float, default=None)
    s.add_argument("--x-grid", default="-8:-2:0.25")

    for name in ("reproduce", "calibrate"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--center", default="0")
        s.add_argument("--scale", type=float, default=1.0)

    s = sub.add_parser("blowup", parents=[common])
    s.add_argument("--p", default="2")
    s.add_argument("--s", type=float, default=None)
    s.add_argument("--s-grid", default="1.4:1.8:0.05")
    s.add_argument("--eps-grid", default=None)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--side", choices=("near", "far", "both"), default="near")
    s.add_argument("--kernel", choices=("leading", "series"), default="leading")

    s = sub.add_parser("scaling", parents=[common])
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--lambdas", default="1,10,100")
    return parser


_COMMON = {"n", "alpha", "beta", "m_amp", "j", "k", "seed", "tol", "out", "dry_run", "subcommand"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = WormParams(alpha=ns.alpha, beta=ns.beta, smoothing_m=ns.m_amp, dim=ns.n)
    j = _ints(ns.j) if ns.j else (0,) * (ns.n - 2)
    mode = ModeIndex(j, ns.k)
    mode.check_dim(ns.n)
    options = {k: v for k, v in vars(ns).items() if k not in _COMMON}
    return RunConfig(ns.subcommand, params, mode, ns.seed, ns.tol, ns.out, ns.dry_run, options)


def _sidecar(out: Path, payload: dict) -> None:
    out.with_suffix(".json").write_text(json.dumps(payload, indent=2, default=str) + "\n")


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out) if cfg.out else Path(f"{cfg.subcommand}.csv")
    started = time.perf_counter()
    payload = {"config": cfg.to_json(), "version": __version__, "errors": []}
    status = 0
    try:
        result = RUNNERS[cfg.subcommand](cfg, cfg.dry_run)
        if cfg.dry_run:
            print(json.dumps({"plan": result, "config": cfg.to_json()}, indent=2, default=str))
            return 0
        out.write_text(result.to_csv())
        payload["summary"] = result.summary
        payload["rows"] = len(result.rows)
    except NumericalError as exc:
        status = 2
        payload["errors"].append({"type": type(exc).__name__, "message": str(exc)})
        print(f"numerical failure: {exc}", file=sys.stderr)
    except ValueError as exc:
        status = 1
        payload["errors"].append({"type": type(exc).__name__, "message": str(exc)})
        print(f"invalid configuration: {exc}", file=sys.stderr)
    if cfg.dry_run:
        return status
    payload["runtime_s"] = time.perf_counter() - started
    payload["exit_status"] = status
    _sidecar(out, payload)
    return status


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--flag -3,3`` into ``--flag=-3,3`` so values may start with a minus sign."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok.startswith("--") and "=" not in tok and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = parser.parse_args(_glue_negative_values(argv))
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
