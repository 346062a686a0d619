"""Command-line entry point: verify, transform, substitute, analyze-imc and gen."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import List, Optional

from .bigstep import big_step
from .engine import EngineOptions, Verdict, check_region, resolve_target, verify
from .fixtures import FIXTURES, GENERATORS
from .formats import (ParseError, parse_imc, parse_model, parse_property, parse_region,
                      serialize_imc, serialize_model)
from .imc import analyze, find_mecs
from .model import interval_substitute
from .region import SplitStrategy

EXIT_CODES = {"AllSat": 0, "Refuted": 1, "AllViolate": 1, "Unknown": 2}
INPUT_ERROR = 3


def _read(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmcverify", description="Region verification for parametric Markov chains")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="decide a property on a parameter region")
    v.add_argument("-m", "--model", help="model file (.pmc); standard input if omitted")
    v.add_argument("-r", "--region", required=True, help="region text or @file")
    v.add_argument("-p", "--property", required=True)
    v.add_argument("--bigstep", choices=["on", "off"], default="on")
    v.add_argument("--split", choices=["roundrobin", "width"], default="roundrobin")
    v.add_argument("--split-arity", type=_positive_int, default=4)
    v.add_argument("--precision", type=float, default=1e-6)
    v.add_argument("--max-regions", type=_positive_int, default=100_000)
    v.add_argument("--timeout-s", type=float, default=None)
    v.add_argument("--samples-per-region", type=int, default=8)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=_positive_int, default=1)
    v.add_argument("--dump-regions", metavar="PATH")
    v.add_argument("--json", action="store_true", help="print only the JSON record")

    t = sub.add_parser("transform", help="print the big-step transformed model")
    t.add_argument("-m", "--model")

    s = sub.add_parser("substitute", help="print the interval model of a region")
    s.add_argument("-m", "--model")
    s.add_argument("-r", "--region", required=True)

    a = sub.add_parser("analyze-imc", help="reachability interval of an interval model")
    a.add_argument("-m", "--model")
    a.add_argument("--precision", type=float, default=1e-6)
    a.add_argument("--json", action="store_true")

    g = sub.add_parser("gen", help="print a benchmark model")
    g.add_argument("family", choices=sorted(GENERATORS) + sorted(FIXTURES))
    g.add_argument("--n", type=int, default=None)
    return ap


def _region_text(text: str) -> str:
    return _read(text[1:]).strip() if text.startswith("@") else text


def _cmd_verify(args, out) -> int:
    D = parse_model(_read(args.model))
    R = parse_region(_region_text(args.region), D.params, D.discrete)
    phi = parse_property(args.property)
    opts = EngineOptions(bigstep=args.bigstep == "on", split=SplitStrategy(args.split),
                         split_arity=args.split_arity, precision=args.precision,
                         max_regions=args.max_regions, timeout_s=args.timeout_s,
                         samples_per_region=args.samples_per_region, seed=args.seed,
                         workers=args.workers)
    dump = open(args.dump_regions, "w", encoding="utf-8") if args.dump_regions else None

    def on_region(Rc, res):
        if dump is not None:
            rec = {"region": Rc.to_json(), "depth": Rc.depth, "result": res.kind, "vacuous": res.vacuous}
            if res.estimate is not None:
                rec["estimate"] = [float(res.estimate.lo), float(res.estimate.hi)]
            dump.write(json.dumps(rec) + "\n")

    try:
        verdict = verify(D, R, phi, opts, on_region)
    except ValueError as e:
        raise ParseError(str(e)) from None
    finally:
        if dump is not None:
            dump.close()
    rec = verdict.to_json()
    rec["property"] = str(phi)
    if not args.json:
        out.write(_summary(verdict, phi))
    out.write(json.dumps(rec) + "\n")
    return EXIT_CODES[verdict.kind]


def _summary(v: Verdict, phi) -> str:
    st = v.stats
    lines = [f"verdict: {v.kind}",
             f"property: {phi}",
             f"regions checked: {st.regions_checked} (proven {st.regions_proven}, vacuous {st.vacuous}, max depth {st.max_depth})",
             f"value iteration: {st.vi_sweeps} sweeps ({st.vi_style})",
             f"time: {st.elapsed_s:.3f} s"]
    if v.witness is not None:
        pt = ", ".join(f"{k}={val}" for k, val in v.witness.items())
        lines.append(f"witness: {pt} -> {v.value} ({float(v.value):.6g})")
    if v.reason:
        lines.append(f"reason: {v.reason}")
    return "\n".join(lines) + "\n"


def run(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return INPUT_ERROR if e.code else 0
    try:
        if args.command == "verify":
            return _cmd_verify(args, out)
        if args.command == "transform":
            out.write(serialize_model(big_step(parse_model(_read(args.model)))))
            return 0
        if args.command == "substitute":
            D = parse_model(_read(args.model))
            R = parse_region(_region_text(args.region), D.params, D.discrete)
            out.write(serialize_imc(interval_substitute(D, R.box())))
            return 0
        if args.command == "analyze-imc":
            I = parse_imc(_read(args.model))
            res = analyze(I, args.precision)
            rec = {"interval": [float(res.interval.lo), float(res.interval.hi)],
                   "mecs": [sorted(C) for C in find_mecs(I).mecs],
                   "infeasible": sorted(I.infeasible), "vacuous": res.vacuous, "vi_sweeps": res.sweeps}
            if not args.json:
                out.write(f"reachability interval: [{float(res.interval.lo):.6g}, {float(res.interval.hi):.6g}]\n")
            out.write(json.dumps(rec) + "\n")
            return 0
        if args.command == "gen":
            if args.family in GENERATORS:
                kw = {"n": args.n} if args.n is not None else {}
                out.write(serialize_model(GENERATORS[args.family](**kw)))
            else:
                out.write(FIXTURES[args.family])
            return 0
    except ParseError as e:
        sys.stderr.write(f"input error: {e}\n")
        return INPUT_ERROR
    except (OSError, ValueError) as e:
        sys.stderr.write(f"input error: {e}\n")
        return INPUT_ERROR
    return INPUT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
