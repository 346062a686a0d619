"""Parametric, interval and plain Markov chains, instantiation and exact reachability."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from .bounds import Interval, bound_box, clamp_unit
from .poly import Polynomial, as_fraction

Instantiation = Dict[str, Fraction]


class ModelError(ValueError):
    pass


def _check_states(states, init, good, trans):
    known = set(states)
    if len(known) != len(states):
        raise ModelError("duplicate state name")
    if init not in known:
        raise ModelError(f"initial state {init!r} is not declared")
    for g in good:
        if g not in known:
            raise ModelError(f"target state {g!r} is not declared")
    for s, row in trans.items():
        if s not in known:
            raise ModelError(f"transition source {s!r} is not declared")
        for t in row:
            if t not in known:
                raise ModelError(f"transition target {t!r} is not declared")


@dataclass
class PMC:
    """Parametric Markov chain.

    ``trans[s][t]`` is the transition polynomial; absent entries are zero.
    States without outgoing transitions are made absorbing.
    """
    states: Tuple[str, ...]
    params: Tuple[str, ...]
    init: str
    trans: Dict[str, Dict[str, Polynomial]]
    good: FrozenSet[str]
    discrete: FrozenSet[str] = frozenset()

    def __post_init__(self):
        self.states = tuple(self.states)
        self.params = tuple(self.params)
        self.good = frozenset(self.good)
        self.discrete = frozenset(self.discrete)
        rows = {}
        for s in self.states:
            row = {t: p for t, p in self.trans.get(s, {}).items() if not p.is_zero()}
            rows[s] = row or {s: Polynomial.const(1)}
        _check_states(self.states, self.init, self.good, self.trans)
        self.trans = rows
        if not self.discrete <= set(self.params):
            raise ModelError("discrete parameter not declared as parameter")
        for s, row in self.trans.items():
            for t, f in row.items():
                extra = f.variables() - set(self.params)
                if extra:
                    raise ModelError(f"transition {s}->{t} uses undeclared parameter {sorted(extra)[0]!r}")

    def successors(self, s: str) -> Dict[str, Polynomial]:
        return self.trans.get(s, {})

    def num_transitions(self) -> int:
        return sum(len(r) for r in self.trans.values())

    def used_params(self) -> FrozenSet[str]:
        out = set()
        for row in self.trans.values():
            for f in row.values():
                out |= f.variables()
        return frozenset(out)


@dataclass
class MC:
    states: Tuple[str, ...]
    init: str
    trans: Dict[str, Dict[str, Fraction]]
    good: FrozenSet[str]


@dataclass
class IMC:
    """Interval Markov chain; ``infeasible`` lists states whose rows admit no distribution."""
    states: Tuple[str, ...]
    init: str
    trans: Dict[str, Dict[str, Interval]]
    good: FrozenSet[str]
    bad: FrozenSet[str] = frozenset()
    infeasible: FrozenSet[str] = frozenset()

    def __post_init__(self):
        self.states = tuple(self.states)
        self.good = frozenset(self.good)
        self.bad = frozenset(self.bad)
        _check_states(self.states, self.init, self.good, self.trans)
        rows = {}
        for s in self.states:
            row = {t: iv for t, iv in self.trans.get(s, {}).items() if iv.hi > 0}
            rows[s] = row if s in self.trans else {s: Interval.point(1)}
        self.trans = rows
        bad_rows = set(self.infeasible)
        for s, row in self.trans.items():
            lo = sum((iv.lo for iv in row.values()), Fraction(0))
            hi = sum((iv.hi for iv in row.values()), Fraction(0))
            if lo > 1 or hi < 1:
                bad_rows.add(s)
        self.infeasible = frozenset(bad_rows)


@dataclass(frozen=True)
class NotWellDefined:
    state: str
    reason: str


def instantiate(D: PMC, u: Mapping[str, Fraction]) -> Union[MC, NotWellDefined]:
    """Evaluate every transition at ``u``; report the first row that is not a distribution."""
    for k in D.discrete:
        if k in u and as_fraction(u[k]).denominator != 1:
            raise ValueError(f"discrete parameter {k!r} needs an integer value")
    trans: Dict[str, Dict[str, Fraction]] = {}
    for s in D.states:
        row = {}
        total = Fraction(0)
        for t, f in D.trans[s].items():
            v = f.eval(u)
            if v < 0 or v > 1:
                return NotWellDefined(s, f"P({s},{t}) = {v} outside [0,1]")
            if v:
                row[t] = v
            total += v
        if total != 1:
            return NotWellDefined(s, f"row of {s} sums to {total}")
        trans[s] = row
    return MC(D.states, D.init, trans, D.good)


def _backward_reach(states: Iterable[str], edges: Mapping[str, Iterable[str]], targets) -> set:
    preds: Dict[str, List[str]] = {s: [] for s in states}
    for s, succ in edges.items():
        for t in succ:
            preds.setdefault(t, []).append(s)
    seen = set(targets)
    todo = deque(seen)
    while todo:
        t = todo.popleft()
        for s in preds.get(t, ()):
            if s not in seen:
                seen.add(s)
                todo.append(s)
    return seen


def mc_reach(M: MC, good: Optional[Iterable[str]] = None) -> Dict[str, Fraction]:
    """Exact probability of eventually reaching ``good`` from every state."""
    good = frozenset(M.good if good is None else good)
    can = _backward_reach(M.states, {s: [t for t, v in r.items() if v] for s, r in M.trans.items()}, good)
    unknown = [s for s in M.states if s in can and s not in good]
    idx = {s: i for i, s in enumerate(unknown)}
    n = len(unknown)
    # rows of (I - P) x = b over the states with positive reachability
    A = [[Fraction(0)] * (n + 1) for _ in range(n)]
    for s, i in idx.items():
        A[i][i] += 1
        for t, v in M.trans[s].items():
            if t in good:
                A[i][n] += v
            elif t in idx:
                A[i][idx[t]] -= v
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        pr = A[col]
        inv = 1 / pr[col]
        for j in range(col, n + 1):
            pr[j] *= inv
        for r in range(n):
            if r != col and A[r][col] != 0:
                row, c = A[r], A[r][col]
                for j in range(col, n + 1):
                    if pr[j]:
                        row[j] -= c * pr[j]
    out = {s: Fraction(0) for s in M.states}
    for s in good:
        out[s] = Fraction(1)
    for s, i in idx.items():
        out[s] = A[i][n]
    return out


def reach_probability(D: PMC, u: Mapping[str, Fraction]) -> Optional[Fraction]:
    """Reachability from the initial state at ``u``, or ``None`` if ``u`` is not well defined."""
    M = instantiate(D, u)
    if isinstance(M, NotWellDefined):
        return None
    return mc_reach(M)[D.init]


def interval_substitute(D: PMC, box: Mapping[str, Interval], tol=Fraction(1, 10 ** 6)) -> IMC:
    """Replace every transition by a clamped enclosure of its range over ``box``."""
    if hasattr(box, "box"):
        box = box.box()
    trans: Dict[str, Dict[str, Interval]] = {}
    infeasible = set()
    for s in D.states:
        row = {}
        for t, f in D.trans[s].items():
            if f.is_constant():
                iv = clamp_unit(Interval.point(f.constant_value()))
            else:
                iv = clamp_unit(bound_box(f, box, tol))
            if iv is None:
                infeasible.add(s)
                continue
            row[t] = iv
        trans[s] = row
    I = IMC(D.states, D.init, trans, D.good, infeasible=frozenset(infeasible))
    from .imc import zero_states
    I.bad = frozenset(zero_states(I))
    return I


def is_member(M: MC, I: IMC) -> bool:
    """Whether every transition of ``M`` lies in the corresponding interval of ``I``."""
    for s in M.states:
        row = I.trans.get(s, {})
        for t, v in M.trans[s].items():
            if v and (t not in row or not row[t].contains(v)):
                return False
        for t, iv in row.items():
            if iv.lo > 0 and not M.trans[s].get(t):
                return False
    return True
