"""Region refinement loop: interval abstraction per region, verdicts, witnesses and budgets."""
from __future__ import annotations

import random
import time
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from .bigstep import big_step
from .bounds import Interval
from .imc import VI_STYLE, analyze
from .model import PMC, interval_substitute, reach_probability
from .poly import as_fraction
from .region import PointRegion, Region, SplitStrategy, sample, split

SAT, VIOLATE, UNDECIDED = "Sat", "Violate", "Undecided"


@dataclass(frozen=True)
class Property:
    """``P op threshold [F label]``."""
    op: str
    threshold: Fraction
    label: str = "good"

    def __post_init__(self):
        if self.op not in ("<", "<=", ">", ">="):
            raise ValueError(f"unknown comparison {self.op!r}")
        object.__setattr__(self, "threshold", as_fraction(self.threshold))

    def holds(self, value: Fraction) -> bool:
        t = self.threshold
        return {"<": value < t, "<=": value <= t, ">": value > t, ">=": value >= t}[self.op]

    def __str__(self):
        return f'P{self.op}{self.threshold} [F "{self.label}"]'


@dataclass
class EngineOptions:
    bigstep: bool = True
    split: SplitStrategy = SplitStrategy.ROUND_ROBIN
    split_arity: int = 4
    precision: float = 1e-6
    bound_tol: Fraction = Fraction(1, 10 ** 6)
    max_regions: Optional[int] = 100_000
    timeout_s: Optional[float] = None
    samples_per_region: int = 8
    seed: int = 0
    workers: int = 1


@dataclass
class RegionResult:
    kind: str
    estimate: Optional[Interval]
    vacuous: bool = False
    sweeps: int = 0


@dataclass
class Stats:
    regions_checked: int = 0
    regions_proven: int = 0
    vacuous: int = 0
    max_depth: int = 0
    depth_histogram: Dict[int, int] = field(default_factory=dict)
    vi_sweeps: int = 0
    vi_style: str = VI_STYLE
    elapsed_s: float = 0.0
    bigstep_s: float = 0.0


@dataclass
class Verdict:
    kind: str  # AllSat | AllViolate | Refuted | Unknown
    stats: Stats
    witness: Optional[Dict[str, Fraction]] = None
    value: Optional[Fraction] = None
    reason: Optional[str] = None
    tightest: Optional[Interval] = None

    def to_json(self) -> dict:
        out = {"verdict": self.kind,
               "regions_checked": self.stats.regions_checked,
               "regions_proven": self.stats.regions_proven,
               "vacuous_regions": self.stats.vacuous,
               "max_depth": self.stats.max_depth,
               "depth_histogram": {str(k): v for k, v in sorted(self.stats.depth_histogram.items())},
               "vi_sweeps": self.stats.vi_sweeps,
               "vi_style": self.stats.vi_style,
               "elapsed_s": round(self.stats.elapsed_s, 6),
               "bigstep_s": round(self.stats.bigstep_s, 6)}
        if self.witness is not None:
            out["witness"] = {k: str(v) for k, v in self.witness.items()}
            out["witness_float"] = {k: float(v) for k, v in self.witness.items()}
            out["value"] = str(self.value)
            out["value_float"] = float(self.value)
        if self.reason:
            out["reason"] = self.reason
        if self.tightest is not None:
            out["tightest"] = [float(self.tightest.lo), float(self.tightest.hi)]
        return out


def resolve_target(D: PMC, label: str) -> PMC:
    """Point the model's good set at the property label."""
    if label in D.states:
        good = frozenset({label})
    elif label in ("good", "target"):
        good = D.good
    else:
        raise ValueError(f"property label {label!r} names neither a state nor the model target")
    if good == D.good:
        return D
    return PMC(D.states, D.params, D.init, D.trans, good, D.discrete)


def decide(estimate: Interval, phi: Property) -> str:
    """Three-way verdict on an estimate that is already widened by the VI precision."""
    lo, hi, t = estimate.lo, estimate.hi, phi.threshold
    if phi.op == "<":
        return SAT if hi < t else VIOLATE if lo >= t else UNDECIDED
    if phi.op == "<=":
        return SAT if hi <= t else VIOLATE if lo > t else UNDECIDED
    if phi.op == ">=":
        return SAT if lo >= t else VIOLATE if hi < t else UNDECIDED
    return SAT if lo > t else VIOLATE if hi <= t else UNDECIDED


def check_region(D: PMC, R: Region, phi: Property, opts: Optional[EngineOptions] = None) -> RegionResult:
    opts = opts or EngineOptions()
    I = interval_substitute(D, R.box(), opts.bound_tol)
    if I.infeasible:
        # some row admits no distribution, so no instantiation in R is well defined
        return RegionResult(SAT, None, vacuous=True)
    res = analyze(I, opts.precision)
    return RegionResult(decide(res.interval, phi), res.interval, sweeps=res.sweeps)


def _find_witness(D, R, phi, n, seed) -> Optional[Tuple[Dict[str, Fraction], Fraction]]:
    pts = [R.center()] if R.contains(R.center()) else []
    pts += sample(R, D, n, seed)
    for u in pts:
        v = reach_probability(D, u)
        if v is not None and not phi.holds(v):
            return u, v
    return None


def _point_value(D, R):
    return reach_probability(D, {n: iv.lo for n, iv in R.bounds})


def _check_job(args):
    D, R, phi, opts = args
    return check_region(D, R, phi, opts)


def verify(D: PMC, R: Region, phi: Property, opts: Optional[EngineOptions] = None,
           on_region: Optional[Callable[[Region, RegionResult], None]] = None) -> Verdict:
    """Decide whether every well-defined instantiation in ``R`` satisfies ``phi``."""
    opts = opts or EngineOptions()
    start = time.perf_counter()
    stats = Stats()
    D = resolve_target(D, phi.label)
    if opts.bigstep:
        D = big_step(D)
        stats.bigstep_s = time.perf_counter() - start
    occ = Counter(v for row in D.trans.values() for f in row.values() for v in f.variables())
    queue = deque([R])
    tightest: Optional[Interval] = None
    pool = ProcessPoolExecutor(opts.workers) if opts.workers > 1 else None

    def finish(kind, **kw):
        stats.elapsed_s = time.perf_counter() - start
        if pool is not None:
            pool.shutdown(cancel_futures=True)
        return Verdict(kind, stats, **kw)

    try:
        while queue:
            batch = []
            while queue and len(batch) < max(1, opts.workers * 2 if pool else 1):
                batch.append(queue.popleft())
            if pool is not None:
                results = list(pool.map(_check_job, [(D, r, phi, opts) for r in batch]))
            else:
                results = [check_region(D, r, phi, opts) for r in batch]
            for Rc, res in zip(batch, results):
                # results are consumed in queue order, so the outcome does not depend on workers
                if opts.max_regions is not None and stats.regions_checked >= opts.max_regions:
                    return finish("Unknown", reason=_budget_reason("region budget exhausted", tightest, phi, opts),
                                  tightest=tightest)
                if opts.timeout_s is not None and time.perf_counter() - start > opts.timeout_s:
                    return finish("Unknown", reason=_budget_reason("time budget exhausted", tightest, phi, opts),
                                  tightest=tightest)
                stats.regions_checked += 1
                stats.vi_sweeps += res.sweeps
                stats.max_depth = max(stats.max_depth, Rc.depth)
                stats.depth_histogram[Rc.depth] = stats.depth_histogram.get(Rc.depth, 0) + 1
                if on_region is not None:
                    on_region(Rc, res)
                seed = hash((opts.seed, stats.regions_checked)) & 0xFFFFFFFF
                if res.kind == SAT:
                    stats.regions_proven += 1
                    stats.vacuous += res.vacuous
                    continue
                if res.kind == VIOLATE:
                    w = _find_witness(D, Rc, phi, opts.samples_per_region, seed)
                    if w is not None:
                        kind = "AllViolate" if Rc.depth == 0 else "Refuted"
                        return finish(kind, witness=w[0], value=w[1])
                    if Rc.is_point():
                        # the only point is not well defined (or satisfies phi exactly)
                        stats.vacuous += _point_value(D, Rc) is None
                        continue
                else:
                    tightest = res.estimate if tightest is None or res.estimate.width < tightest.width else tightest
                    w = _find_witness(D, Rc, phi, opts.samples_per_region, seed)
                    if w is not None:
                        return finish("Refuted", witness=w[0], value=w[1])
                    if Rc.is_point():
                        v = _point_value(D, Rc)
                        stats.vacuous += v is None
                        continue
                try:
                    queue.extend(split(Rc, opts.split, opts.split_arity, occ))
                except PointRegion:
                    continue
        return finish("AllSat")
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)


def _budget_reason(base, tightest, phi, opts):
    if tightest is not None:
        t = phi.threshold
        eps = Fraction(opts.precision) * 2
        if abs(tightest.lo - t) <= eps or abs(tightest.hi - t) <= eps:
            return "threshold coincidence"
    return base
