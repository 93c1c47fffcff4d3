"""Command-line interface: JSON in, JSON out.

Exit codes: 0 success, 1 domain or infeasibility error, 2 malformed input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import io
from .distribution import log_pdf, moments, sample
from .fusion import fuse, plane_mle
from .harness import ScenarioConfig, calibration_curve, fit_params, simulate_rig
from .mapping import compute_stats, stats_from_ranges
from .special import DomainError

EXIT_OK, EXIT_DOMAIN, EXIT_MALFORMED = 0, 1, 2

logger = logging.getLogger("projhuber")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_MALFORMED)


def _read_input(args, required: bool = True):
    if args.input is None:
        if required:
            raise io.MalformedInput("--input is required for this command")
        return None
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise io.MalformedInput(f"cannot read {args.input}: {exc}") from exc
    return io.loads(text)


def _params_payload(obj):
    """Accept a bare DistParams object or one wrapped as ``{"params": ...}``."""
    if isinstance(obj, dict) and "params" in obj:
        return io.dist_params_from_json(obj["params"])
    return io.dist_params_from_json(obj)


def _solver_tol(args, default: float = 1e-8) -> float:
    tol = default if args.tol is None else args.tol
    if not tol > 0:
        raise DomainError("--tol must be > 0")
    return tol


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def cmd_eval(args):
    obj = _read_input(args)
    params = _params_payload(obj)
    pts = io.array(io._require(obj, "points"), (None, 3), "points")
    values = log_pdf(pts, params)
    return {"log_pdf": np.atleast_1d(values)}


def cmd_sample(args):
    params = _params_payload(_read_input(args))
    n = 1000 if args.n is None else args.n
    if n < 1:
        raise DomainError("--n must be >= 1")
    return {"points": sample(params, n, _seed(args))}


def cmd_moments(args):
    m = moments(_params_payload(_read_input(args)))
    return {"mean_proj": m.mean_proj, "var_proj": m.var_proj, "mean_depth": m.mean_depth, "var_depth": m.var_depth}


def cmd_stats(args):
    if args.z_range is not None or args.f_range is not None:
        if args.z_range is None or args.f_range is None:
            raise io.MalformedInput("--z-range and --f-range must be given together")
        for lo, hi in (args.z_range, args.f_range):
            if not 0 < lo <= hi:
                raise DomainError("ranges must satisfy 0 < lo <= hi")
        stats = stats_from_ranges(tuple(args.z_range), tuple(args.f_range))
    else:
        obj = _read_input(args)
        samples = io.array(io._require(obj, "samples"), (None, 2), "samples")
        stats = compute_stats(samples)
    return io.stats_to_json(stats)


def _fusion_json(res):
    return {"v_star": res.v_star, "nll": res.nll, "iterations": res.iterations, "converged": res.converged}


def cmd_fuse(args):
    obj = _read_input(args)
    views = io.views_from_json(io._require(obj, "views"))
    init = obj.get("init")
    init = None if init is None else io.array(init, (3,), "init")
    return _fusion_json(fuse(views, init=init, grad_tol=_solver_tol(args)))


def cmd_plane(args):
    obj = _read_input(args)
    views = io.views_from_json(io._require(obj, "views"))
    plane = io.plane_from_json(io._require(obj, "plane"))
    return _fusion_json(plane_mle(views, plane, grad_tol=_solver_tol(args)))


def cmd_fit(args):
    obj = _read_input(args)
    obs = io.observations_from_json(io._require(obj, "observations"))
    init = obj.get("init")
    init = None if init is None else io.raw_from_json(init)
    res = fit_params(obs, init=init, grad_tol=_solver_tol(args, 1e-9))
    return {
        "w": res.w,
        "params": io.normalized_params_to_json(res.params),
        "loss": res.loss,
        "converged": res.converged,
        "at_boundary": res.at_boundary,
    }


def cmd_simulate(args):
    obj = _read_input(args, required=False)
    cfg = ScenarioConfig() if obj is None else io.scenario_from_json(obj)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    views = simulate_rig(cfg)
    fused = fuse(views, grad_tol=_solver_tol(args))
    return {
        "scenario": io.scenario_to_json(cfg),
        "views": [io.view_to_json(v) for v in views],
        "fused": _fusion_json(fused),
        "error": float(np.linalg.norm(fused.v_star - np.asarray(cfg.truth))),
    }


def cmd_calibrate(args):
    obj = _read_input(args)
    pairs = io.array(io._require(obj, "pairs"), (None, 2), "pairs")
    window = 200 if args.window is None else args.window
    curve = calibration_curve(pairs[:, 0], pairs[:, 1], window)
    return {"curve": curve.to_pairs()}


def cmd_verify(args):
    from .verify import run_suite

    results = run_suite(full=args.full, seed=_seed(args))
    for r in results:
        print(r.line(), file=sys.stderr)
    report = [r.to_json() for r in results]
    exit_code = EXIT_OK if all(r.passed for r in results) else EXIT_DOMAIN
    return report, exit_code


COMMANDS = {
    "eval": (cmd_eval, "log-density of points under a parameter set"),
    "sample": (cmd_sample, "draw points from a parameter set"),
    "moments": (cmd_moments, "closed-form projected and depth moments"),
    "stats": (cmd_stats, "dataset constants mu_z0 and D"),
    "fuse": (cmd_fuse, "maximum-likelihood fusion of several views"),
    "plane": (cmd_plane, "most likely point on a plane"),
    "fit": (cmd_fit, "direct maximum-likelihood fit in raw-output space"),
    "simulate": (cmd_simulate, "simulate a camera rig and fuse its views"),
    "calibrate": (cmd_calibrate, "calibration curve from (predicted variance, squared error) pairs"),
    "verify": (cmd_verify, "run the invariant suites"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="input JSON file ('-' for stdin)")
    common.add_argument("--output", help="write JSON here instead of stdout")
    common.add_argument("--seed", type=int, help="RNG seed (default 0; for simulate, overrides the scenario)")
    common.add_argument("--n", type=int, help="sample count")
    common.add_argument("--tol", type=float, help="solver gradient tolerance")
    common.add_argument("--window", type=int, help="calibration window size")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="projhuber", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "stats":
            p.add_argument("--z-range", type=float, nargs=2, metavar=("LO", "HI"))
            p.add_argument("--f-range", type=float, nargs=2, metavar=("LO", "HI"))
        if name == "verify":
            p.add_argument("--full", action="store_true", help="acceptance-size runs (slow)")
    return parser


def _emit(payload, path):
    text = io.dumps(payload) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise DomainError("--seed must be an unsigned 64-bit integer")
        out = handler(args)
        code = EXIT_OK
        if args.command == "verify":
            out, code = out
        _emit(out, args.output)
        return code
    except io.MalformedInput as exc:
        print(f"projhuber: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except DomainError as exc:
        print(f"projhuber: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
