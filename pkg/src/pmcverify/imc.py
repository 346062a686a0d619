"""Interval MC analysis: zero states, maximal end components, EC elimination and robust VI."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from .bounds import Interval
from .model import IMC

VI_STYLE = "jacobi"


class Opt(enum.Enum):
    MIN = "min"
    MAX = "max"


class InfeasibleRow(ValueError):
    pass


class NonUniqueFixpoint(ValueError):
    pass


@dataclass
class MecPartition:
    mecs: List[FrozenSet[str]]
    residual: FrozenSet[str]


@dataclass
class ValueVector:
    values: Dict[str, float]
    residual: float
    sweeps: int

    def __getitem__(self, s):
        return self.values[s]


def zero_states(I: IMC) -> Set[str]:
    """States that cannot reach ``good`` along edges with positive upper bound."""
    preds: Dict[str, List[str]] = {s: [] for s in I.states}
    for s, row in I.trans.items():
        if s in I.good:
            continue
        for t, iv in row.items():
            if iv.hi > 0:
                preds[t].append(s)
    seen = set(I.good)
    todo = deque(seen)
    while todo:
        t = todo.popleft()
        for s in preds[t]:
            if s not in seen:
                seen.add(s)
                todo.append(s)
    return {s for s in I.states if s not in seen}


def _possible_edges(I: IMC, s: str):
    row = I.trans[s]
    lo_sum = sum((iv.lo for iv in row.values()), Fraction(0))
    for t, iv in row.items():
        if iv.hi > 0 and 1 - (lo_sum - iv.lo) > 0:
            yield t


def find_mecs(I: IMC) -> MecPartition:
    """Maximal end components outside good, zero states and infeasible rows."""
    fixed = set(I.good) | zero_states(I) | set(I.bad) | set(I.infeasible)
    cand = {s for s in I.states if s not in fixed}
    edges = {s: [t for t in _possible_edges(I, s)] for s in cand}
    while True:
        g = nx.DiGraph()
        g.add_nodes_from(cand)
        g.add_edges_from((s, t) for s in cand for t in edges[s] if t in cand)
        comps = [frozenset(c) for c in nx.strongly_connected_components(g)]
        removed = False
        for C in comps:
            for s in C:
                row = I.trans[s]
                leaves = any(iv.lo > 0 for t, iv in row.items() if t not in C)
                inside = sum((iv.hi for t, iv in row.items() if t in C and t in edges[s]), Fraction(0))
                if leaves or inside < 1:
                    cand.discard(s)
                    removed = True
        if not removed:
            break
    mecs = [C for C in comps if len(C) > 1 or any(s in edges[s] for s in C)]
    mecs.sort(key=lambda C: min(I.states.index(s) for s in C))
    members = set().union(*mecs) if mecs else set()
    return MecPartition(mecs, frozenset(s for s in I.states if s not in members))


def _fresh(name: str, taken) -> str:
    out = name
    i = 0
    while out in taken:
        i += 1
        out = f"{name}{i}"
    return out


def eliminate_ecs(I: IMC) -> IMC:
    """Collapse every MEC into one state with [0,1] exits, including one to a bad sink."""
    part = find_mecs(I)
    if not part.mecs:
        return I
    rep: Dict[str, str] = {}
    taken = set(I.states)
    names = []
    for C in part.mecs:
        members = sorted(C, key=I.states.index)
        name = _fresh("ec[" + "+".join(members) + "]", taken)
        taken.add(name)
        names.append(name)
        for s in C:
            rep[s] = name
    sinks = [b for b in sorted(I.bad, key=I.states.index)
             if I.trans[b] == {b: Interval.point(1)}]
    extra = []
    if sinks:
        bad = sinks[0]
    else:
        bad = _fresh("bad", taken)
        extra.append(bad)
    states = []
    for s in I.states:
        r = rep.get(s, s)
        if r not in states:
            states.append(r)
    states += extra
    trans: Dict[str, Dict[str, Interval]] = {}
    for s in I.states:
        if s in rep:
            continue
        row: Dict[str, Interval] = {}
        for t, iv in I.trans[s].items():
            r = rep.get(t, t)
            if r in row:
                # several targets merged: their masses add up
                old = row[r]
                row[r] = Interval(min(Fraction(1), old.lo + iv.lo), min(Fraction(1), old.hi + iv.hi))
            else:
                row[r] = iv
        trans[s] = row
    unit = Interval(Fraction(0), Fraction(1))
    for C, name in zip(part.mecs, names):
        row = {}
        for s in C:
            for t, iv in I.trans[s].items():
                if iv.hi > 0 and t not in C:
                    row[rep.get(t, t)] = unit
        row[bad] = unit
        trans[name] = row
    if extra:
        trans[bad] = {bad: Interval.point(1)}
    init = rep.get(I.init, I.init)
    out = IMC(tuple(states), init, trans, I.good, frozenset(I.bad) | {bad}, I.infeasible)
    return out


def inner_opt(values: Sequence, intervals: Sequence[Interval], opt: Opt):
    """Optimal value of the inner LP over one row, solved greedily and exactly."""
    lo_sum = sum((iv.lo for iv in intervals), Fraction(0))
    hi_sum = sum((iv.hi for iv in intervals), Fraction(0))
    if lo_sum > 1 or hi_sum < 1:
        raise InfeasibleRow(f"row bounds sum to [{lo_sum}, {hi_sum}]")
    order = sorted(range(len(values)), key=lambda i: values[i], reverse=(opt == Opt.MAX))
    w = [iv.lo for iv in intervals]
    deficit = 1 - lo_sum
    for i in order:
        if deficit <= 0:
            break
        add = min(intervals[i].width, deficit)
        w[i] += add
        deficit -= add
    return sum((wi * v for wi, v in zip(w, values)), Fraction(0) * 0)


class _Compiled:
    """Edge arrays of an iMC for vectorized sweeps."""

    def __init__(self, I: IMC, opt: Opt):
        self.states = list(I.states)
        idx = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        self.fixed = np.full(n, np.nan)
        zeros = zero_states(I) | set(I.bad)
        for s in self.states:
            if s in I.good:
                self.fixed[idx[s]] = 1.0
            elif s in I.infeasible:
                # no distribution exists here: let the state not constrain the estimate
                self.fixed[idx[s]] = 0.0 if opt == Opt.MAX else 1.0
            elif s in zeros:
                self.fixed[idx[s]] = 0.0
        src, dst, lo, hi = [], [], [], []
        for s in self.states:
            i = idx[s]
            if not np.isnan(self.fixed[i]):
                continue
            for t, iv in I.trans[s].items():
                src.append(i)
                dst.append(idx[t])
                lo.append(float(iv.lo))
                hi.append(float(iv.hi))
        self.n = n
        self.src = np.array(src, dtype=np.int64)
        self.dst = np.array(dst, dtype=np.int64)
        self.lo = np.array(lo)
        self.slack = np.array(hi) - self.lo
        self.deficit = 1.0 - np.bincount(self.src, weights=self.lo, minlength=n)
        self.free = np.isnan(self.fixed)
        self.idx = idx


def _sweep(c: _Compiled, x: np.ndarray, opt: Opt) -> np.ndarray:
    vals = x[c.dst]
    key = -vals if opt == Opt.MAX else vals
    order = np.lexsort((key, c.src))
    src = c.src[order]
    slack = c.slack[order]
    cum = np.cumsum(slack)
    # mass already handed to better successors of the same source
    starts = np.searchsorted(src, src, side="left")
    base = np.concatenate(([0.0], cum))[starts]
    before = cum - slack - base
    give = np.clip(c.deficit[src] - before, 0.0, slack)
    w = c.lo[order] + give
    new = np.bincount(src, weights=w * vals[order], minlength=c.n)
    out = np.where(c.free, new, x)
    return out


def robust_vi(I: IMC, opt: Opt, precision: float = 1e-6, max_sweeps: int = 1_000_000,
              check: bool = True) -> ValueVector:
    """Value iteration from the good indicator.

    Stops once the sup-norm change and its geometric tail estimate both drop below ``precision``.
    """
    if check and find_mecs(I).mecs:
        raise NonUniqueFixpoint("iMC has end components outside good and bad; eliminate them first")
    c = _Compiled(I, opt)
    x = np.where(c.free, 0.0, c.fixed)
    if c.src.size == 0:
        return ValueVector({s: float(x[i]) for i, s in enumerate(c.states)}, 0.0, 0)
    sweeps = 0
    diff = prev = 0.0
    while sweeps < max_sweeps:
        y = _sweep(c, x, opt)
        sweeps += 1
        prev, diff = diff, float(np.max(np.abs(y - x)))
        x = y
        if diff == 0.0:
            break
        if diff < precision and prev > 0.0:
            # geometric tail: remaining change is about diff * r / (1 - r)
            r = min(diff / prev, 1.0 - 1e-9)
            if diff * r / (1.0 - r) < precision:
                break
    x = np.clip(x, 0.0, 1.0)
    return ValueVector({s: float(x[i]) for i, s in enumerate(c.states)}, diff, sweeps)


@dataclass
class ReachResult:
    interval: Interval
    sweeps: int
    mecs: int
    # some row admits no distribution, so the iMC has no member chain
    vacuous: bool = False


def analyze(I: IMC, precision: float = 1e-6) -> ReachResult:
    E = eliminate_ecs(I)
    nm = len(E.states) - len(I.states)
    lo = robust_vi(E, Opt.MIN, precision, check=False)
    hi = robust_vi(E, Opt.MAX, precision, check=False)
    eps = Fraction(precision)
    a = max(Fraction(0), Fraction(lo[E.init]) - eps)
    b = min(Fraction(1), Fraction(hi[E.init]) + eps)
    if a > b:
        # only possible with infeasible rows, which fix Min high and Max low
        a, b = b, a
    return ReachResult(Interval(a, b), lo.sweeps + hi.sweeps, len(find_mecs(I).mecs) if nm else 0,
                       vacuous=bool(I.infeasible))


def reachability_interval(I: IMC, precision: float = 1e-6) -> Interval:
    """[min, max] probability of reaching good from the initial state, widened by ``precision``."""
    return analyze(I, precision).interval
