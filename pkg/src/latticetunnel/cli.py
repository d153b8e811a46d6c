"""Command-line experiment harness.

Subcommands expose each pipeline artifact independently:

    validate     hypothesis checks of the model
    spectrum     Dirichlet spectra per well over the eps sweep
    distance     eikonal distance fields (CSV dumps)
    geodesic     minimal geodesic / crossing manifold extraction
    interact     exact interaction term w_jk per eps
    asymptotics  fit of the exponential law and prefactor power
    sweep        the full pipeline (all of the above + report CSVs)
    pdo-check    randomized exactness suite of the symbol calculus

Verbosity is controlled by the TUNNEL_LOG environment variable
(quiet|info|debug).  Exit code 0 means every hard check passed.
"""

import argparse
import os
import sys
from fractions import Fraction

import numpy as np

from .config import load_experiment
from .lattice import LatticeDomain
from .models import validate_model
from .pipeline import StageError, run_pipeline


def _log_level():
    return os.environ.get("TUNNEL_LOG", "info").lower()


def _say(*args):
    if _log_level() != "quiet":
        print(*args)


def _debug_logger():
    if _log_level() == "debug":
        return lambda *a: print("[debug]", *a)
    return None


def _parse_eps_list(text):
    return [float(Fraction(tok)) for tok in text.replace(",", " ").split()]


def _load(args):
    overrides = {}
    if args.eps:
        overrides["eps_list"] = _parse_eps_list(args.eps)
    if args.level is not None:
        overrides["target_level"] = args.level
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_experiment(args.config, overrides=overrides)


def cmd_validate(args):
    cfg = _load(args)
    sample = LatticeDomain(cfg.eps_list[0], cfg.box, periodic=cfg.periodic)
    report = validate_model(cfg.model, sample)
    _say(report)
    return 0 if report.passed else 1


def cmd_sweep(args):
    cfg = _load(args)
    try:
        rep = run_pipeline(cfg, args.out, log=_debug_logger())
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _say(f"slope fit   S = {rep.fit.S:.6f}")
    _say(f"prefactor   p = {rep.fit.p:.4f}   (R^2 = {rep.fit.r_squared:.8f})")
    for r in rep.rows:
        _say(f"eps={r.eps:<10.6g} w={r.w_jk: .6e} pred={r.w_pred: .6e} "
             f"ratio={r.ratio:.4f}")
    _say(f"outputs in {args.out}")
    return 0 if rep.ok else 1


def _partial(args, stages):
    """Run the full pipeline but report only the requested artifact."""
    cfg = _load(args)
    try:
        rep = run_pipeline(cfg, args.out, log=_debug_logger())
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for s in stages:
        _say(f"{s}: {rep.files.get(s, rep.geometry.get(s, ''))}")
    return 0 if rep.ok else 1


def cmd_spectrum(args):
    return _partial(args, ["spectra"])


def cmd_distance(args):
    return _partial(args, ["distance_j", "distance_k"])


def cmd_geodesic(args):
    return _partial(args, ["geodesic", "case"])


def cmd_interact(args):
    cfg = _load(args)
    try:
        rep = run_pipeline(cfg, args.out, log=_debug_logger())
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for r in rep.rows:
        _say(f"eps={r.eps:<10.6g} w_jk={r.w_jk: .10e} w_kj={r.w_kj: .10e} "
             f"mu_j={r.mu_j:.10f} mu_k={r.mu_k:.10f}")
    return 0 if rep.ok else 1


def cmd_asymptotics(args):
    cfg = _load(args)
    try:
        rep = run_pipeline(cfg, args.out, log=_debug_logger())
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _say(f"S = {rep.fit.S!r}")
    _say(f"p = {rep.fit.p!r}")
    _say(f"R^2 = {rep.fit.r_squared!r}")
    return 0 if rep.ok else 1


def cmd_pdo_check(args):
    from .pdo import lattice_laplace
    from .pdo_suite import run_suite

    results = run_suite(seed=args.seed or 0, instances=args.instances)
    ok = True
    for name, dev, tol in results:
        status = "PASS" if dev <= tol else "FAIL"
        ok &= dev <= tol
        _say(f"[{status}] {name}: max deviation {dev:.3e} (tol {tol:.0e})")

    # lattice Laplace sweep dump (Gaussian reference case)
    records, J0, slope = lattice_laplace(
        lambda p: np.ones(p.shape[0]), lambda p: 0.5 * p[:, 0] ** 2, [0.0],
        [1 / 10, 1 / 16, 1 / 24, 1 / 32, 1 / 40], [[-12, 12]], hessian=[[1.0]])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "laplace_sweep.csv")
    with open(path, "w") as fh:
        fh.write("eps,scaled_sum,J0,abs_dev\n")
        for eps, s in records:
            fh.write("%.17g,%.17g,%.17g,%.17g\n" % (eps, s, J0, abs(s - J0)))
    _say(f"lattice Laplace sweep written to {path} (J0 = {J0!r})")
    return 0 if ok else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="latticetunnel",
                                 description="tunneling asymptotics for lattice "
                                             "difference operators")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--eps", default=None, help="override epsilon list (e.g. '1/10 1/20')")
        p.add_argument("--level", type=int, default=None, help="target harmonic level")
        p.add_argument("--threads", type=int, default=None, help="sweep worker threads")
        p.add_argument("--seed", type=int, default=None, help="randomization seed")

    for name, fn in [("validate", cmd_validate), ("spectrum", cmd_spectrum),
                     ("distance", cmd_distance), ("geodesic", cmd_geodesic),
                     ("interact", cmd_interact), ("asymptotics", cmd_asymptotics),
                     ("sweep", cmd_sweep)]:
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("pdo-check")
    common(p, needs_config=False)
    p.add_argument("--instances", type=int, default=20, help="randomized instances per check")
    p.set_defaults(fn=cmd_pdo_check)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
