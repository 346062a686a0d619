"""Parameter regions: mixed continuous/discrete boxes, splitting and sampling."""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .bounds import Interval
from .poly import as_fraction


class PointRegion(ValueError):
    """Raised when a region has no coordinate left to split."""


class SplitStrategy(enum.Enum):
    ROUND_ROBIN = "roundrobin"
    WIDTH = "width"


@dataclass(frozen=True)
class Region:
    """Closed box over ``params``; discrete coordinates carry integer bounds.

    ``cursor`` remembers where round-robin splitting resumes in children.
    """
    bounds: Tuple[Tuple[str, Interval], ...]
    discrete: FrozenSet[str] = frozenset()
    cursor: int = 0
    depth: int = 0

    def __post_init__(self):
        for name, iv in self.bounds:
            if name in self.discrete and (iv.lo.denominator != 1 or iv.hi.denominator != 1):
                raise ValueError(f"discrete parameter {name!r} needs integer bounds")

    @classmethod
    def from_dict(cls, bounds: Mapping[str, Interval], discrete=frozenset(), order=None) -> "Region":
        names = list(order) if order is not None else list(bounds)
        return cls(tuple((n, bounds[n]) for n in names), frozenset(discrete))

    @property
    def params(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.bounds)

    def box(self) -> Dict[str, Interval]:
        return dict(self.bounds)

    def __getitem__(self, name: str) -> Interval:
        for n, iv in self.bounds:
            if n == name:
                return iv
        raise KeyError(name)

    def splittable(self) -> List[str]:
        return [n for n, iv in self.bounds if iv.width > 0]

    def is_point(self) -> bool:
        return not self.splittable()

    def center(self) -> Dict[str, Fraction]:
        out = {}
        for n, iv in self.bounds:
            m = iv.mid
            if n in self.discrete:
                m = Fraction(math.floor(m))
            out[n] = m
        return out

    def contains(self, u: Mapping[str, Fraction]) -> bool:
        for n, iv in self.bounds:
            v = as_fraction(u[n])
            if not iv.contains(v):
                return False
            if n in self.discrete and v.denominator != 1:
                return False
        return True

    def with_bounds(self, bounds: Dict[str, Interval], cursor: int) -> "Region":
        return Region(tuple((n, bounds[n]) for n in self.params), self.discrete, cursor, self.depth + 1)

    def describe(self) -> str:
        parts = []
        for n, iv in self.bounds:
            if iv.is_point():
                parts.append(f"{n} = {iv.lo}")
            else:
                parts.append(f"{iv.lo} <= {n} <= {iv.hi}")
        return ", ".join(parts)

    def to_json(self) -> Dict[str, List[str]]:
        return {n: [str(iv.lo), str(iv.hi)] for n, iv in self.bounds}


def _halves(name: str, iv: Interval, discrete: bool) -> List[Interval]:
    if not discrete:
        return [Interval(iv.lo, iv.mid), Interval(iv.mid, iv.hi)]
    # discrete halves are disjoint integer ranges
    cut = Fraction(math.floor(iv.mid))
    if cut == iv.hi:
        cut -= 1
    return [Interval(iv.lo, cut), Interval(cut + 1, iv.hi)]


def split(R: Region, strategy: SplitStrategy = SplitStrategy.ROUND_ROBIN, k: int = 1,
          occurrences: Optional[Mapping[str, int]] = None) -> List[Region]:
    """Bisect ``k`` coordinates of ``R`` at their midpoints (2**k children).

    Round-robin picks coordinates cyclically starting at ``R.cursor``; the width
    heuristic picks the widest coordinates, weighted by how often the parameter
    occurs in the model (``occurrences``).
    """
    if k < 1:
        raise ValueError("split arity must be positive")
    cands = R.splittable()
    if not cands:
        raise PointRegion("region has no splittable coordinate")
    names = R.params
    k = min(k, len(cands))
    if strategy == SplitStrategy.ROUND_ROBIN or strategy == "roundrobin":
        order = [names[(R.cursor + i) % len(names)] for i in range(len(names))]
        chosen = [n for n in order if n in cands][:k]
        last = names.index(chosen[-1])
        cursor = (last + 1) % len(names)
    else:
        occ = occurrences or {}
        chosen = sorted(cands, key=lambda n: (-(R[n].width * max(1, occ.get(n, 1))), names.index(n)))[:k]
        cursor = R.cursor
    children = [R.box()]
    for n in chosen:
        nxt = []
        for b in children:
            for half in _halves(n, b[n], n in R.discrete):
                c = dict(b)
                c[n] = half
                nxt.append(c)
        children = nxt
    return [R.with_bounds(b, cursor) for b in children]


def sample(R: Region, D, n: int, seed: int = 0, max_tries: Optional[int] = None) -> List[Dict[str, Fraction]]:
    """Draw up to ``n`` well-defined instantiations of ``D`` from ``R`` by rejection."""
    from .model import NotWellDefined, instantiate

    rng = random.Random(seed)
    out: List[Dict[str, Fraction]] = []
    tries = max_tries if max_tries is not None else 20 * n
    if R.is_point():
        u = {k: iv.lo for k, iv in R.bounds}
        return [u] if not isinstance(instantiate(D, u), NotWellDefined) else []
    for _ in range(tries):
        if len(out) >= n:
            break
        u = {}
        for name, iv in R.bounds:
            if name in R.discrete:
                u[name] = Fraction(rng.randint(int(iv.lo), int(iv.hi)))
            else:
                u[name] = iv.lo + iv.width * Fraction(rng.randint(0, 1 << 20), 1 << 20)
        if not isinstance(instantiate(D, u), NotWellDefined):
            out.append(u)
    return out
