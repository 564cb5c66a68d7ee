"""Command-line front end.

Every command prints machine-readable JSON (or CSV) on stdout, a short human
summary on stderr, and writes its outputs plus a ``<command>_manifest.json``
into ``--out``.

Exit codes: 0 ok, 1 assertion failure, 2 input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from typing import List, Optional

import numpy as np

from . import __version__
from .construct import (ConstructionError, construct_homoclinic, construct_hopf, jacobian_rank,
                        tilde_a1)
from .expansion import expand_homoclinic, expand_hopf
from .melnikov import (QuadratureError, closed_form, eval_melnikov, float_closed_form,
                       quadrature_oracle, sample_table)
from .model import PerturbationSpec, SpecError, random_spec
from .ring import parse_rational
from .simulate import SimConfig, SimulationError, find_limit_cycles, integrate_to_section, trace_csv
from .zeros import (GridTooCoarseError, SturmError, count_zeros, upper_bound_certificate,
                    zmax_table)

EXIT_OK, EXIT_ASSERT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, message, case=None):
        super().__init__(message)
        self.case = case


def _rational_float(text: str) -> float:
    try:
        return float(parse_rational(text))
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_spec(path: Optional[str]) -> PerturbationSpec:
    if not path:
        raise InputError("--config PATH is required")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return PerturbationSpec.from_json(obj)
    except SpecError as exc:
        raise InputError(f"{path}: {exc}") from None


class Run:
    """Collects outputs and writes the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        self.outputs: List[str] = []
        self.t0 = time.perf_counter()

    def write(self, name: str, text: str) -> str:
        os.makedirs(self.out, exist_ok=True)
        path = os.path.join(self.out, name)
        with open(path, "w") as fh:
            fh.write(text)
        self.outputs.append(path)
        return path

    def write_json(self, name: str, obj) -> str:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def manifest(self):
        m = {"command": self.args.command, "config_path": getattr(self.args, "config", None),
             "seed": getattr(self.args, "seed", None), "outputs": self.outputs,
             "tool_version": __version__, "wall_time": time.perf_counter() - self.t0,
             "argv": sys.argv[1:]}
        os.makedirs(self.out, exist_ok=True)
        with open(os.path.join(self.out, f"{self.args.command}_manifest.json"), "w") as fh:
            json.dump(m, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _say(msg: str):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------

def cmd_closed_form(args, run: Run):
    spec = _load_spec(args.config)
    cf = closed_form(spec)
    out = {"spec": spec.to_json(), "closed_form": cf.to_json(),
           "f": [str(c) for c in cf.f.coeffs], "g": [str(c) for c in cf.g.coeffs]}
    if args.sample:
        if args.sample < 2:
            raise InputError("--sample needs at least 2 points")
        hs = np.linspace(0.02, 0.98, args.sample)
        text = sample_table(spec, hs)
        run.write("closed_form_sample.csv", text)
        diffs = [float(line.split(",")[3]) for line in text.splitlines()[1:]]
        out["sample_max_abs_diff"] = max(diffs)
    run.write_json("closed_form.json", out)
    _emit(out)
    _say(f"f = {cf.f}\ng = {cf.g}")


def cmd_eval(args, run: Run):
    spec = _load_spec(args.config)
    cf = closed_form(spec)
    hs = [float(parse_rational(h)) for h in (args.h or [])]
    if not hs:
        hs = list(np.linspace(0.02, 0.98, args.grid or 25))
    rows = []
    for h in hs:
        if not 0.0 < h < 1.0:
            raise InputError(f"h = {h} outside (0, 1)")
        row = {"h": h, "melnikov": eval_melnikov(cf, h)}
        if args.oracle:
            row["oracle"] = quadrature_oracle(spec, h)
        rows.append(row)
    run.write_json("eval.json", rows)
    _emit(rows)


def cmd_zeros(args, run: Run):
    spec = _load_spec(args.config)
    cf = closed_form(spec)
    rep = count_zeros(cf, grid=args.grid, tol=args.tol, dps=args.dps)
    cert = upper_bound_certificate(cf)
    out = {"report": rep.to_json(), "certificate": cert.to_json(), "zmax": zmax_table(spec.n)}
    run.write_json("zeros.json", out)
    _emit(out)
    _say(f"zeros found: {rep.count}; certificate bound: {cert.bound}; zmax: {zmax_table(spec.n)}")
    if rep.count > cert.bound:
        raise CheckFailed("zero count exceeds certificate bound", out)


def cmd_expand(args, run: Run):
    spec = _load_spec(args.config)
    cf = closed_form(spec)
    out = {}
    if args.kind in ("homoclinic", "both"):
        out["homoclinic"] = {"variable": "h", "terms": expand_homoclinic(cf, args.order).records()}
    if args.kind in ("hopf", "both"):
        out["hopf"] = {"variable": "1-h", "terms": expand_hopf(cf, args.order).records()}
    run.write_json("expand.json", out)
    _emit(out)


def cmd_construct(args, run: Run):
    fn = construct_hopf if args.kind == "hopf" else construct_homoclinic
    res = fn(args.n, args.t, ratio=args.ratio, grid=args.grid)
    run.write_json("spec.json", res.spec.to_json())
    run.write_json("ledger.json", res.ledger.to_json())
    out = {"kind": args.kind, "n": args.n, "t_used": res.ledger.t, "predicted": res.predicted,
           "found": res.found, "zeros": res.report.to_json()["zeros"], "spec": res.spec.to_json()}
    _emit(out)
    _say(f"{args.kind} n={args.n}: predicted {res.predicted}, found {res.found}")
    if res.found != res.predicted:
        raise CheckFailed("construction did not realize the predicted zeros", out)


def cmd_rank(args, run: Run):
    if args.which == "tilde-a1":
        cert = tilde_a1(args.n, args.variant.replace("-", "_"))
    else:
        cert = jacobian_rank(args.which, args.n)
    out = cert.to_json()
    run.write_json("rank.json", out)
    _emit({k: out[k] for k in ("which", "n", "rank", "expected", "ok")})
    _say(f"{cert.which} n={cert.n}: rank {cert.rank}, expected {cert.expected}")
    if not cert.ok:
        raise CheckFailed("rank differs from the expected value", out)


def cmd_simulate(args, run: Run):
    spec = _load_spec(args.config)
    if args.epsilon is None:
        raise InputError("--epsilon is required")
    try:
        cfg = SimConfig(args.epsilon, fixed_step=args.fixed_step)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lo, hi = args.h_range
    rep = find_limit_cycles(spec, cfg, (lo, hi), args.grid or 40)
    out = rep.to_json()
    run.write_json("cycles.json", out)
    if args.trace:
        for k, fp in enumerate(rep.fixed_points):
            tr = []
            integrate_to_section(fp["y_section"], spec, cfg, trace=tr)
            run.write(f"trace_{k}.csv", trace_csv(tr))
    _emit(out)
    _say(f"fixed points: {len(rep.fixed_points)}; matched: {len(rep.matched)}; "
         f"unmatched cycles: {len(rep.unmatched_cycles)}; unmatched zeros: {len(rep.unmatched_zeros)}")


def _table(rows, header):
    _say(" | ".join(header))
    for r in rows:
        _say(" | ".join(str(x) for x in r))


def _sweep_task(payload):
    n, seed, samples = payload
    rng = np.random.default_rng(seed)
    worst = []
    for _ in range(samples):
        s = random_spec(n, rng)
        cf = closed_form(s)
        cert = upper_bound_certificate(cf)
        c = count_zeros(cf).count
        worst.append((c, cert.bound))
        if c > cert.bound:
            return {"n": n, "failure": s.to_json(), "count": c, "bound": cert.bound}
    return {"n": n, "max_count": max(w[0] for w in worst), "max_bound": max(w[1] for w in worst)}


def _map(fn, items, jobs):
    if jobs and jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def cmd_reproduce(args, run: Run):
    th = args.theorem
    rows, failures = [], []
    seed = 0 if args.seed is None else args.seed
    if th in ("1.1", "1.2"):
        for kind, fn in (("hopf", construct_hopf), ("homoclinic", construct_homoclinic)):
            for n in range(1, 5):
                res = fn(n)
                pred = n + (n + 1) // 2
                rows.append((kind, n, pred, res.found))
                if res.found != pred:
                    failures.append({"kind": kind, "n": n, "spec": res.spec.to_json(), "found": res.found})
        if th == "1.2":
            rng = np.random.default_rng(seed)
            for n in range(1, 5):
                dim = len(PerturbationSpec(n).coordinates())
                worst = 0
                for _ in range(args.samples):
                    v = rng.standard_normal(dim)
                    c = count_zeros(float_closed_form(n, v)).count
                    worst = max(worst, c)
                    if c > zmax_table(n)["upper"]:
                        failures.append({"n": n, "vector": v.tolist(), "count": c})
                rows.append(("random", n, zmax_table(n)["upper"], worst))
        _table(rows, ["family", "n", "predicted/Z(n)", "found"])
    elif th == "1.3":
        tasks = [(n, seed * 1000 + n, args.samples) for n in (5, 6)]
        for r in _map(_sweep_task, tasks, args.jobs):
            n = r["n"]
            cap = 2 * n + (n + 1) // 2
            if "failure" in r:
                failures.append(r)
                rows.append((n, cap, r["count"], r["bound"]))
            else:
                rows.append((n, cap, r["max_count"], r["max_bound"]))
                if r["max_bound"] > cap:
                    failures.append(r)
        _table(rows, ["n", "2n+[(n+1)/2]", "max count", "max certificate"])
    elif th == "appendix":
        for variant in ("paper_mu", "taylor_mu"):
            for n in range(1, 16, 2):
                c = tilde_a1(n, variant)
                rows.append((variant, n, c.rank, c.expected))
                if not c.ok:
                    failures.append(c.to_json())
        _table(rows, ["variant", "n", "rank", "expected"])
    out = {"theorem": th, "rows": [list(r) for r in rows], "failures": failures, "ok": not failures}
    run.write_json(f"reproduce_{th}.json", out)
    _emit(out)
    if failures:
        raise CheckFailed(f"reproduce {th}: {len(failures)} failing case(s)", failures[0])


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwlmelnikov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="perturbation spec JSON")
        sp.add_argument("--out", default="pwlmelnikov_out", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=1)
        return sp

    sp = common(sub.add_parser("closed-form", help="exact (f, g) of Mbar"))
    sp.add_argument("--sample", type=int, default=0, help="write an N-point oracle comparison CSV")
    sp.set_defaults(func=cmd_closed_form)

    sp = common(sub.add_parser("eval", help="evaluate Mbar at given h"))
    sp.add_argument("--h", action="append", help="level in (0,1); rational strings accepted; repeatable")
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--oracle", action="store_true", help="also run the quadrature oracle")
    sp.set_defaults(func=cmd_eval)

    sp = common(sub.add_parser("zeros", help="zeros of Mbar and the bound certificate"))
    sp.add_argument("--tol", type=_rational_float, default=1e-12)
    sp.add_argument("--grid", type=int, default=4096)
    sp.add_argument("--dps", type=int, default=None, help="evaluate in mpmath at this precision")
    sp.set_defaults(func=cmd_zeros)

    sp = common(sub.add_parser("expand", help="expansions near the loop and the center"))
    sp.add_argument("--order", type=int, default=6)
    sp.add_argument("--kind", choices=["homoclinic", "hopf", "both"], default="both")
    sp.set_defaults(func=cmd_expand)

    sp = common(sub.add_parser("construct", help="ladder construction with maximal zeros"), config=False)
    sp.add_argument("--kind", choices=["hopf", "homoclinic"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=_rational_float, default=0.1)
    sp.add_argument("--ratio", type=_rational_float, default=0.5)
    sp.add_argument("--grid", type=int, default=4096)
    sp.set_defaults(func=cmd_construct)

    sp = common(sub.add_parser("rank", help="exact rank certificates"), config=False)
    sp.add_argument("--which", choices=["tilde-a1", "hopf", "homoclinic"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--variant", choices=["paper-mu", "taylor-mu"], default="paper-mu")
    sp.set_defaults(func=cmd_rank)

    sp = common(sub.add_parser("simulate", help="return-map fixed points vs Melnikov zeros"))
    sp.add_argument("--epsilon", type=_rational_float, default=None)
    sp.add_argument("--h-range", type=_rational_float, nargs=2, default=(0.02, 0.98))
    sp.add_argument("--grid", type=int, default=40)
    sp.add_argument("--fixed-step", type=_rational_float, default=None)
    sp.add_argument("--trace", action="store_true", help="write a (t, x, y) CSV per cycle")
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("reproduce", help="rerun a theorem check"), config=False)
    sp.add_argument("--theorem", choices=["1.1", "1.2", "1.3", "appendix"], required=True)
    sp.add_argument("--samples", type=int, default=200)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    run = Run(args)
    try:
        args.func(args, run)
        status = EXIT_OK
    except (InputError, SpecError) as exc:
        _say(f"input error: {exc}")
        return EXIT_INPUT
    except CheckFailed as exc:
        _say(f"check failed: {exc}")
        if exc.case is not None:
            _say(json.dumps(exc.case, sort_keys=True, default=str))
        status = EXIT_ASSERT
    except (QuadratureError, SimulationError, ConstructionError, GridTooCoarseError,
            SturmError, ArithmeticError) as exc:
        _say(f"numeric failure: {type(exc).__name__}: {exc}")
        status = EXIT_NUMERIC
    except ValueError as exc:
        _say(f"input error: {exc}")
        return EXIT_INPUT
    run.manifest()
    return status


if __name__ == "__main__":
    sys.exit(main())
