"""Batch command-line front end.

Exit codes: 0 success, 1 I/O, 2 validation, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .contrast import ContrastConfig
from .errors import MinContrastError, ValidationError
from .fitter import FitOptions, fit, initial_theta
from .geometry import RectWindow
from .inference import (correlation_table, covariance_report, report_rows, select_cr)
from .io import (manifest, read_json, read_pattern, write_curves, write_json, write_pattern)
from .kfunc import k_matrix
from .lgcp import THETA_NAMES, LgcpParams, model_curves
from .simulator import SimConfig, sample_lgcp

log = logging.getLogger("mincontrast")

THREADS_ENV = "MINCONTRAST_THREADS"


def parse_grid(spec: str) -> list[float]:
    """``lo:hi:step`` inclusive of ``hi`` within 1e-9, or a comma list."""
    if ":" not in spec:
        return [float(v) for v in spec.split(",") if v.strip()]
    try:
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ValidationError(f"grid must be lo:hi:step, got {spec!r}") from None
    if step <= 0 or hi < lo:
        raise ValidationError(f"bad grid {spec!r}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(n)]


def _window(values):
    return None if values is None else RectWindow(*map(float, values))


def _model_from_file(path) -> LgcpParams:
    cfg = read_json(path)
    params = LgcpParams.from_dict(cfg)
    for name in THETA_NAMES:
        if not getattr(params, name) > 0:
            raise ValidationError(f"{name} must be > 0, got {getattr(params, name)}")
    return params


def _fit_config(path) -> dict:
    return read_json(path) if path else {}


def _pattern(args, cfg=None):
    win = _window(args.window) if getattr(args, "window", None) else None
    if win is None and cfg and "window" in cfg:
        win = RectWindow(*map(float, cfg["window"]))
    return read_pattern(args.pattern, win)


def _options(cfg: dict, trace=False) -> FitOptions:
    opts = cfg.get("options", {})
    return FitOptions(**{**opts, "trace": trace or opts.get("trace", False)})


def cmd_simulate(args):
    params = _model_from_file(args.config)
    win = _window(args.window) or RectWindow(-5.0, 5.0, -5.0, 5.0)
    sim = SimConfig(params, win, args.resolution, args.seed, args.replicates, args.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    counts = []
    for r in range(args.replicates):
        pat = sample_lgcp(sim, r)
        write_pattern(out / f"pattern_{r}.csv", pat)
        counts.append(pat.counts().tolist())
    write_json(out / "manifest.json", {
        "manifest": manifest("simulate", {"model": params.to_dict(), "window": win.as_list(),
                                          "resolution": args.resolution, "method": args.method,
                                          "replicates": args.replicates},
                             [args.config], args.seed, args.wall_time()),
        "replicate_seeds": [[args.seed, r] for r in range(args.replicates)],
        "counts": counts})


def cmd_kfun(args):
    cfg = _fit_config(args.config)
    pat = _pattern(args, cfg)
    conf = ContrastConfig.from_dict({**cfg, **{k: v for k, v in
                                               (("R", args.R), ("n0", args.n0),
                                                ("correction", args.correction)) if v is not None}})
    if args.model:
        params = _model_from_file(args.model)
        write_curves(args.out, model_curves(params, conf.grid), model=True)
        return
    km = k_matrix(pat, conf.grid, conf.correction)
    write_curves(args.out, km, {"labels": ";".join(pat.labels)})


def _fit_payload(pat, conf, res, b, args, inputs):
    return {"theta_hat": res.theta_hat.to_dict(), "u_min": res.u_min,
            "iterations": res.iterations, "n_evals": res.n_evals,
            "converged": res.converged, "at_bound": res.at_bound,
            "config": {**conf.to_dict(), "b": b}, "window": pat.window.as_list(),
            "labels": list(pat.labels), "counts": pat.counts().tolist(),
            "version": __version__,
            **({"trace": res.to_dict()["trace"]} if res.trace else {}),
            "manifest": manifest(args.command, conf.to_dict(), inputs, None, args.wall_time())}


def cmd_fit(args):
    cfg = _fit_config(args.config)
    pat = _pattern(args, cfg)
    if pat.m != 2:
        raise ValidationError(f"m=2 required, pattern has m={pat.m}")
    conf = ContrastConfig.from_dict(cfg)
    b = int(cfg.get("b", 1))
    res = fit(pat, conf, b, _options(cfg, args.trace))
    inputs = [args.pattern] + ([args.config] if args.config else [])
    write_json(args.out, _fit_payload(pat, conf, res, b, args, inputs))
    if not res.converged:
        log.warning("optimizer budget exhausted; result marked converged=false")


def _report_payload(rep, args, inputs, distances=None):
    out = rep.to_dict()
    out["rows"] = report_rows(rep)
    if distances:
        out["correlations"] = correlation_table(rep.theta_hat, distances)
    out["manifest"] = manifest(args.command, rep.config.to_dict(), inputs, args.seed,
                               args.wall_time())
    return out


def cmd_varest(args):
    fitted = read_json(args.fit)
    theta = LgcpParams.from_dict(fitted["theta_hat"])
    conf = ContrastConfig.from_dict(fitted["config"])
    win = RectWindow(*fitted["window"])
    rep = covariance_report(theta, conf, win, args.nsim, args.seed, args.resolution,
                            refit=args.refit, workers=args.threads)
    write_json(args.out, _report_payload(rep, args, [args.fit]))


def cmd_select(args):
    cfg = _fit_config(args.config)
    conf = ContrastConfig.from_dict(cfg)
    b = int(cfg.get("b", 1))
    if args.model:
        source = _model_from_file(args.model)
        win = _window(args.window) or RectWindow(-5.0, 5.0, -5.0, 5.0)
        inputs = [args.model]
    else:
        source = _pattern(args, cfg)
        win = source.window
        inputs = [args.pattern]
    res = select_cr(source, parse_grid(args.c_grid), parse_grid(args.r_grid), args.nsim,
                    args.seed, conf, b, win, args.resolution, options=_options(cfg),
                    workers=args.threads)
    out = res.to_dict()
    out["manifest"] = manifest("select", conf.to_dict(), inputs, args.seed, args.wall_time())
    write_json(args.out, out)


def format_table(rows, corr=None) -> str:
    lines = [f"{'param':<8}{'EST':>11}{'SD':>11}{'95% asymptotic CI':>26}{'95% simulation CI':>26}"]
    for r in rows:
        lo, hi = r["ci_asym"]
        sim = r["ci_sim"]
        sim_txt = "-" if sim is None else f"({sim[0]:.4g}, {sim[1]:.4g})"
        lines.append(f"{r['param']:<8}{r['est']:>11.4g}{r['sd']:>11.4g}"
                     f"{f'({lo:.4g}, {hi:.4g})':>26}{sim_txt:>26}")
    if corr:
        lines.append("")
        lines.append(f"{'r':>10}{'corr11':>10}{'corr22':>10}{'corr12':>10}")
        for k, r in enumerate(corr["r"]):
            lines.append(f"{r:>10.4g}{corr['corr11'][k]:>10.3f}{corr['corr22'][k]:>10.3f}"
                         f"{corr['corr12'][k]:>10.3f}")
    return "\n".join(lines) + "\n"


def cmd_pipeline(args):
    cfg = _fit_config(args.config)
    pat = _pattern(args, cfg)
    if pat.m != 2:
        raise ValidationError(f"m=2 required, pattern has m={pat.m}")
    conf = ContrastConfig.from_dict(cfg)
    b = int(cfg.get("b", 1))
    opts = _options(cfg)
    stage = "select"
    payload = {}
    try:
        if args.skip_select:
            if args.c is None or args.R is None:
                raise ValidationError("--skip-select needs --c and --R")
            c_opt, R_opt = args.c, args.R
        else:
            sel = select_cr(pat, parse_grid(args.c_grid), parse_grid(args.r_grid), args.nsim,
                            args.seed, conf, b, pat.window, args.resolution, options=opts,
                            workers=args.threads)
            c_opt, R_opt = sel.c_opt, sel.R_opt
            payload["selection"] = sel.to_dict()
        conf = conf.with_cr(c_opt, R_opt)
        stage = "fit"
        if args.theta:
            theta = _model_from_file(args.theta)
            given = read_json(args.theta)
            # intensities are estimated from the pattern unless given explicitly
            base = initial_theta(pat, b)
            theta = replace(theta, b=int(given.get("b", b)),
                            mu1=float(given.get("mu1", base.mu1)),
                            mu2=float(given.get("mu2", base.mu2)))
            payload["fit"] = {"theta_hat": theta.to_dict(), "injected": True}
        else:
            res = fit(pat, conf, b, opts)
            theta = res.theta_hat
            payload["fit"] = {"theta_hat": theta.to_dict(), "u_min": res.u_min,
                              "converged": res.converged, "iterations": res.iterations}
        stage = "varest"
        rep = covariance_report(theta, conf, pat.window, args.nsim, args.seed + 1,
                                args.resolution, refit=not args.no_refit, options=opts,
                                workers=args.threads)
        stage = "report"
        distances = parse_grid(args.distances) if args.distances else []
        payload["report"] = _report_payload(rep, args, [args.pattern], distances)
    except MinContrastError as exc:
        raise type(exc)(f"pipeline stage '{stage}' failed: {exc}") from exc
    payload["c"], payload["R"] = c_opt, R_opt
    payload["labels"] = list(pat.labels)
    payload["manifest"] = manifest("pipeline", conf.to_dict(), [args.pattern], args.seed,
                                   args.wall_time())
    write_json(args.out, payload)
    table = format_table(payload["report"]["rows"], payload["report"].get("correlations"))
    Path(args.out).with_suffix(".txt").write_text(table)
    print(table, end="")


def build_parser() -> argparse.ArgumentParser:
    threads = int(os.environ.get(THREADS_ENV, "1"))
    p = argparse.ArgumentParser(prog="mincontrast", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=threads,
                   help=f"worker processes for replicate loops (env {THREADS_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate bivariate LGCP patterns")
    s.add_argument("--config", required=True, help="model JSON")
    s.add_argument("--window", nargs=4, type=float, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    s.add_argument("--resolution", type=int, default=128)
    s.add_argument("--method", default="auto", choices=("auto", "circulant", "cholesky"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("kfun", help="estimate K-function curves")
    s.add_argument("--pattern", required=True)
    s.add_argument("--config")
    s.add_argument("--window", nargs=4, type=float)
    s.add_argument("--R", type=float)
    s.add_argument("--n0", type=int)
    s.add_argument("--correction", choices=("none", "border", "isotropic"))
    s.add_argument("--model", help="dump model curves for this model JSON instead")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_kfun)

    s = sub.add_parser("fit", help="minimum-contrast fit")
    s.add_argument("--pattern", required=True)
    s.add_argument("--config")
    s.add_argument("--window", nargs=4, type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", action="store_true")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("varest", help="Monte-Carlo sandwich covariance")
    s.add_argument("--fit", required=True)
    s.add_argument("--nsim", type=int, default=600)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--resolution", type=int, default=128)
    s.add_argument("--refit", action="store_true", help="refit replicates for simulation CIs")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_varest)

    s = sub.add_parser("select", help="choose (c, R) by minimum generalized variance")
    s.add_argument("--pattern")
    s.add_argument("--model", help="select at fixed model parameters instead of a fit")
    s.add_argument("--config")
    s.add_argument("--window", nargs=4, type=float)
    s.add_argument("--c-grid", default="0.1:0.5:0.1")
    s.add_argument("--r-grid", default="0.5:5:0.25")
    s.add_argument("--nsim", type=int, default=600)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--resolution", type=int, default=128)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("pipeline", help="select, fit, varest and report")
    s.add_argument("--pattern", required=True)
    s.add_argument("--config")
    s.add_argument("--window", nargs=4, type=float)
    s.add_argument("--c-grid", default="0.1:0.5:0.1")
    s.add_argument("--r-grid", default="0.5:5:0.25")
    s.add_argument("--skip-select", action="store_true")
    s.add_argument("--c", type=float)
    s.add_argument("--R", type=float)
    s.add_argument("--theta", help="model JSON to use instead of fitting")
    s.add_argument("--distances", help="correlation table distances, e.g. 50,100,250,420")
    s.add_argument("--nsim", type=int, default=600)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--resolution", type=int, default=128)
    s.add_argument("--no-refit", action="store_true", help="skip simulation-based CIs")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    args.wall_time = lambda: round(time.perf_counter() - t0, 3)
    if args.command == "select" and not (args.pattern or args.model):
        parser.error("select needs --pattern or --model")
    try:
        args.func(args)
    except MinContrastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyError as exc:
        print(f"error: missing key {exc}", file=sys.stderr)
        return ValidationError.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
