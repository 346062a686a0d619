"""Big-step transformation: shortcut single-parameter acyclic sub-chains, then group common factors."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Set, Tuple

from .model import PMC
from .poly import Polynomial, common_factor

Gamma = Dict[Tuple[str, str], FrozenSet[str]]


@dataclass
class SubPMC:
    root: str
    param: str
    internal: Tuple[str, ...]  # topological order, root first
    exits: Tuple[str, ...]
    trans: Dict[str, Dict[str, Polynomial]]

    @property
    def degenerate(self) -> bool:
        return len(self.internal) <= 1


@dataclass
class BigStepResult:
    pmc: PMC
    shortcuts: int = 0
    groups: int = 0
    candidates_checked: int = 0
    log: List[Tuple[str, str]] = field(default_factory=list)


def _copy(D: PMC, trans=None, states=None, good=None) -> PMC:
    return PMC(tuple(states if states is not None else D.states), D.params, D.init,
               {s: dict(r) for s, r in (trans if trans is not None else D.trans).items()},
               good if good is not None else D.good, D.discrete)


def _is_const(f: Polynomial) -> bool:
    return f.is_constant()


def gamma_map(D: PMC) -> Gamma:
    """For each (s, p): states reachable via constant transitions that carry a p-transition."""
    const_succ = {s: [t for t, f in D.trans[s].items() if _is_const(f)] for s in D.states}
    carries = {s: frozenset().union(*[f.variables() for f in D.trans[s].values()])
               for s in D.states if s not in D.good}
    out: Gamma = {}
    for s in D.states:
        if s in D.good:
            continue
        seen = {s}
        todo = [s]
        while todo:
            x = todo.pop()
            for t in const_succ[x]:
                if t not in seen and t not in D.good:
                    seen.add(t)
                    todo.append(t)
        for p in D.params:
            out[(s, p)] = frozenset(x for x in seen if p in carries.get(x, ()))
    return out


def _univariate_in(D: PMC, s: str, p: str) -> bool:
    return all(f.variables() <= {p} for f in D.trans[s].values())


def extract_sub(D: PMC, root: str, p: str, gamma: Gamma) -> SubPMC:
    """Grow an acyclic sub-chain from ``root`` whose internal rows only mention ``p``."""

    def internalizable(s):
        return (s not in D.good and _univariate_in(D, s, p) and bool(gamma.get((s, p)))
                and s not in D.trans[s])

    if not internalizable(root):
        succ = tuple(D.trans[root])
        return SubPMC(root, p, (root,), succ, {root: dict(D.trans[root])})
    color: Dict[str, str] = {}
    exits: List[str] = []
    post: List[str] = []
    color[root] = "gray"
    stack = [(root, iter(D.trans[root]))]
    while stack:
        s, it = stack[-1]
        t = next(it, None)
        if t is None:
            color[s] = "black"
            post.append(s)
            stack.pop()
            continue
        if t in color:
            continue
        # internalizing t must not close a cycle through the current DFS path
        if internalizable(t) and not any(color.get(u) == "gray" for u in D.trans[t]):
            color[t] = "gray"
            stack.append((t, iter(D.trans[t])))
        else:
            color[t] = "exit"
            exits.append(t)
    internal = tuple(reversed(post))
    return SubPMC(root, p, internal, tuple(exits), {s: dict(D.trans[s]) for s in internal})


def _prune(D: PMC, trans: Dict[str, Dict[str, Polynomial]]) -> PMC:
    seen = {D.init}
    todo = [D.init]
    while todo:
        s = todo.pop()
        for t in trans[s]:
            if t not in seen:
                seen.add(t)
                todo.append(t)
    states = tuple(s for s in D.states if s in seen)
    return PMC(states, D.params, D.init, {s: trans[s] for s in states},
               D.good & set(states), D.discrete)


def shortcut(D: PMC, sub: SubPMC) -> PMC:
    """Replace the root's row by the exact probabilities of leaving the sub-chain at each exit."""
    if sub.degenerate:
        return D
    reach: Dict[str, Polynomial] = {sub.root: Polynomial.const(1)}
    exits = set(sub.exits)
    acc: Dict[str, Polynomial] = {}
    for s in sub.internal:
        fs = reach.get(s)
        if fs is None:
            continue
        for t, f in sub.trans[s].items():
            contrib = fs * f
            target = acc if t in exits else reach
            target[t] = target[t] + contrib if t in target else contrib
    trans = {s: dict(r) for s, r in D.trans.items()}
    trans[sub.root] = {t: acc[t] for t in sub.exits if t in acc and not acc[t].is_zero()}
    return _prune(D, trans)


def group(D: PMC, root: str, f: Polynomial, carriers, name: Optional[str] = None) -> Tuple[PMC, str]:
    """Move the common factor ``f`` of several transitions into a fresh intermediate state.

    ``carriers`` holds ``(target, c_i, g_i)`` with ``P(root, target) = g_i + c_i * f``.
    """
    c = sum((ci for _, ci, _ in carriers), Fraction(0))
    if name is None:
        base, i = f"{root}'", 1
        name = base
        while name in D.states:
            i += 1
            name = f"{root}'{i}"
    trans = {s: dict(r) for s, r in D.trans.items()}
    row = trans[root]
    for t, ci, gi in carriers:
        if gi.is_zero():
            row.pop(t, None)
        else:
            row[t] = gi
    row[name] = f.scale(c)
    trans[name] = {t: Polynomial.const(ci / c) for t, ci, _ in carriers}
    states = D.states + (name,)
    return PMC(states, D.params, D.init, trans, D.good, D.discrete), name


def _rpo(D: PMC) -> List[str]:
    seen = {D.init}
    post: List[str] = []
    stack = [(D.init, iter(D.trans[D.init]))]
    while stack:
        s, it = stack[-1]
        t = next(it, None)
        if t is None:
            post.append(s)
            stack.pop()
        elif t not in seen:
            seen.add(t)
            stack.append((t, iter(D.trans[t])))
    # bottom of the stack first, so the initial state ends up on top
    return post


def _selectable(D: PMC, gamma: Gamma, s: str, p: str) -> bool:
    g = gamma.get((s, p), frozenset())
    if len(g) >= 2:
        return True
    if len(g) == 1:
        (x,) = g
        return any(gamma.get((t, p)) for t, f in D.trans[x].items() if t != x and not f.is_zero())
    return False


def select_candidate(D: PMC, gamma: Gamma, visited: Set[Tuple[str, str]],
                     stack: Optional[List[str]] = None) -> Optional[Tuple[str, str, SubPMC, PMC]]:
    """First unvisited (state, parameter) pair, top of stack first, whose shortcut makes progress.

    Pairs that fail the test are added to ``visited``.  Returns the pair, its
    sub-chain and the shortcut result.
    """
    order = list(reversed(stack)) if stack is not None else list(D.states)
    for s in order:
        if s not in D.trans or s in D.good:
            continue
        for p in D.params:
            if (s, p) in visited:
                continue
            visited.add((s, p))
            if not _selectable(D, gamma, s, p):
                continue
            sub = extract_sub(D, s, p, gamma)
            if sub.degenerate:
                continue
            D2 = shortcut(D, sub)
            # progress: some internal state became unreachable
            if any(x not in D2.trans for x in sub.internal if x != s):
                return s, p, sub, D2
    return None


def group_row(D: PMC, root: str, stack: Optional[List[str]] = None) -> Tuple[PMC, int]:
    n = 0
    while True:
        row = D.trans[root]
        if len(row) < 2:
            return D, n
        targets = list(row)
        cf = common_factor([row[t] for t in targets], positive_only=True)
        if cf is None:
            return D, n
        f, parts = cf
        carriers = [(t, c, g) for t, (g, c) in zip(targets, parts) if c]
        D, name = group(D, root, f, carriers)
        if stack is not None:
            stack.append(name)
        n += 1


def transform(D: PMC, max_iterations: int = 10_000) -> BigStepResult:
    res = BigStepResult(D)
    stack = _rpo(D)
    visited: Set[Tuple[str, str]] = set()
    for _ in range(max_iterations):
        gamma = gamma_map(D)
        cand = select_candidate(D, gamma, visited, stack)
        if cand is None:
            break
        s, p, sub, D = cand
        res.shortcuts += 1
        res.log.append((s, p))
        D, k = group_row(D, s, stack)
        res.groups += k
        stack = [x for x in stack if x in D.trans]
    res.pmc = D
    res.candidates_checked = len(visited)
    return res


def big_step(D: PMC) -> PMC:
    """Equivalent pMC whose interval substitution is never looser than that of ``D``."""
    return transform(D).pmc


compute_gamma = gamma_map
extract_sub_pmc = extract_sub
