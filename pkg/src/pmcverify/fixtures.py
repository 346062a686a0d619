"""Small example models and scalable benchmark families, written in the .pmc format."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict

from .formats import parse_model
from .model import PMC
from .poly import Polynomial

THREE_STEP = """\
# three steps through p, 1-p and q
params p q
states s0 s1 s2 good bad
init s0
target good
trans s0 s1 : p
trans s0 bad : 1 - p
trans s1 s2 : 1 - p
trans s1 bad : p
trans s2 good : q
trans s2 bad : 1 - q
"""

# three-step with the first two steps merged into one transition
THREE_STEP_MERGED = """\
params p q
states s0 s2 good bad
init s0
target good
trans s0 s2 : p*(1 - p)
trans s0 bad : (1 - p) + p^2
trans s2 good : q
trans s2 bad : 1 - q
"""

COMMUTE = """\
# the weather decides first, then the choice of bike or bus
params p
states wake tailwind headwind bus1 bus2 good bad
init wake
target good
trans wake tailwind : 1/2
trans wake headwind : 1/2
trans tailwind good : p
trans tailwind bus1 : 1 - p
trans headwind bad : p
trans headwind bus2 : 1 - p
trans bus1 good : 0.4
trans bus1 bad : 0.6
trans bus2 good : 0.4
trans bus2 bad : 0.6
"""

COMMUTE_REORDERED = """\
# the choice of bike or bus comes first
params p
states wake bike bus good bad
init wake
target good
trans wake bike : p
trans wake bus : 1 - p
trans bike good : 1/2
trans bike bad : 1/2
trans bus good : 0.4
trans bus bad : 0.6
"""

SELF_LOOP = """\
params p
states s0 s1 good bad
init s0
target good
trans s0 s0 : p
trans s0 s1 : 1 - p
trans s1 good : p
trans s1 bad : 1 - p
"""

TWO_STATE_CYCLE = """\
params p
states s0 s1 good
init s0
target good
trans s0 s1 : p
trans s0 good : 1 - p
trans s1 s0 : 1 - p
trans s1 good : p
"""

TWO_STAGE = """\
params p q
states s0 s1 s2 s3 s4 good bad
init s0
target good
trans s0 s1 : 2/5
trans s0 s2 : 3/5
trans s1 s3 : p
trans s1 bad : 1 - p
trans s2 s4 : p
trans s2 bad : 1 - p
trans s3 s4 : q
trans s3 bad : 1 - q
trans s4 good : 1 - q
trans s4 bad : q
"""

SWAP_A = """\
params p q
states s0 s1 s2 good bad
init s0
target good
trans s0 s1 : p
trans s0 s2 : 1 - p
trans s1 good : q
trans s1 bad : 1 - q
trans s2 good : 1 - q
trans s2 bad : q
"""

# the same chain with the roles of p and q exchanged
SWAP_B = """\
params p q
states s0 s1 s2 good bad
init s0
target good
trans s0 s1 : q
trans s0 s2 : 1 - q
trans s1 good : p
trans s1 bad : 1 - p
trans s2 good : 1 - p
trans s2 bad : p
"""

FIXTURES: Dict[str, str] = {
    "three-step": THREE_STEP,
    "three-step-merged": THREE_STEP_MERGED,
    "commute": COMMUTE,
    "commute-reordered": COMMUTE_REORDERED,
    "selfloop": SELF_LOOP,
    "cycle": TWO_STATE_CYCLE,
    "two-stage": TWO_STAGE,
    "swap-a": SWAP_A,
    "swap-b": SWAP_B,
}


def fixture(name: str) -> PMC:
    return parse_model(FIXTURES[name])


def gen_dn(n: int) -> PMC:
    """Family whose regions reach outside the well-defined set without hurting verification.

    From ``s0`` the chain moves to ``s_i`` with probability ``p_i`` (``i < n``) and
    to ``s_n`` with the remaining mass; ``s_i`` reaches good with probability ``1/i``.
    ``s_1`` would reach good surely, so ``p_1`` leads to good directly.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    params = tuple(f"p{i}" for i in range(1, n))
    states = ("s0",) + tuple(f"s{i}" for i in range(2, n + 1)) + ("good", "bad")
    trans: Dict[str, Dict[str, Polynomial]] = {"s0": {}}
    rest = Polynomial.const(1)
    for i, p in enumerate(params, 1):
        trans["s0"]["good" if i == 1 else f"s{i}"] = Polynomial.param(p)
        rest = rest - Polynomial.param(p)
    trans["s0"][f"s{n}"] = Polynomial.from_dense(rest.expand(), as_factor=True)
    for i in range(2, n + 1):
        trans[f"s{i}"] = {"good": Polynomial.const(Fraction(1, i)), "bad": Polynomial.const(1 - Fraction(1, i))}
    return PMC(states, params, "s0", trans, frozenset({"good"}))


def gen_nrp(n: int = 5) -> PMC:
    """Fragment of a negotiation protocol: candidate ``i`` succeeds at round ``i``."""
    params = tuple(f"p{k}" for k in range(1, n + 1))
    states = ["s0"]
    trans: Dict[str, Dict[str, Polynomial]] = {"s0": {}}
    one = Polynomial.const(1)
    for i in range(1, n + 1):
        trans["s0"][f"c{i}l1"] = Polynomial.const(Fraction(1, n))
        for lvl in range(1, i + 1):
            s = f"c{i}l{lvl}"
            states.append(s)
            p = Polynomial.param(f"p{lvl}")
            miss = Polynomial.from_dense((one - p).expand())
            if lvl == i:
                trans[s] = {"good": p, "bad": miss}
            else:
                trans[s] = {"bad": p, f"c{i}l{lvl + 1}": miss}
    states += ["good", "bad"]
    return PMC(tuple(states), params, "s0", trans, frozenset({"good"}))


def gen_family(members: Dict[int, PMC], name: str = "k") -> PMC:
    """Encode several pMCs over the same state set as one pMC with a discrete selector.

    Member ``j`` is chosen by ``k = j``; transitions are combined with Lagrange
    selector polynomials that are 1 at ``j`` and 0 at every other member index.
    """
    idx = sorted(members)
    first = members[idx[0]]
    params = tuple(dict.fromkeys(p for m in members.values() for p in m.params)) + (name,)
    k = Polynomial.param(name)
    trans: Dict[str, Dict[str, Polynomial]] = {s: {} for s in first.states}
    for j in idx:
        sel = Polynomial.const(1)
        for o in idx:
            if o != j:
                sel = sel * Polynomial.from_dense((k - o).expand()).scale(Fraction(1, j - o))
        for s, row in members[j].trans.items():
            for t, f in row.items():
                trans[s][t] = trans[s].get(t, Polynomial()) + sel * f
    return PMC(first.states, params, first.init, trans, first.good, frozenset({name}))


GENERATORS: Dict[str, Callable[..., PMC]] = {"dn": gen_dn, "nrp": gen_nrp}
