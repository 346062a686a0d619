"""Rigorous range enclosures of polynomials over parameter boxes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from .poly import (Dense, Polynomial, as_fraction, dense_derivative, dense_eval,
                   dense_is_multiaffine, dense_degree, dense_substitute, dense_variables)

# multi-affine polynomials are bounded exactly at the box corners up to this many variables
VERTEX_LIMIT = 12
BNB_BUDGET = 256
DERIVATIVE_DEPTH = 2


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> "Interval":
        x = as_fraction(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def widen(self, eps) -> "Interval":
        eps = as_fraction(eps)
        return Interval(self.lo - eps, self.hi + eps)

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other):
        if not isinstance(other, Interval):
            c = as_fraction(other)
            return Interval(self.lo * c, self.hi * c) if c >= 0 else Interval(self.hi * c, self.lo * c)
        ps = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k == 0:
            return Interval.point(1)
        a, b = self.lo ** k, self.hi ** k
        if k % 2 == 0:
            if self.lo >= 0:
                return Interval(a, b)
            if self.hi <= 0:
                return Interval(b, a)
            return Interval(Fraction(0), max(a, b))
        return Interval(a, b)

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


Box = Mapping[str, Interval]


def ia_dense(f: Mapping, box: Box) -> Interval:
    """Natural interval extension of an expanded polynomial."""
    total = Interval.point(0)
    for m, c in f.items():
        term = Interval.point(c)
        for name, e in m:
            term = term * (box[name] ** e)
        total = total + term
    return total


def ia_eval(f: Polynomial, box: Box) -> Interval:
    """Interval arithmetic on the factorized form (each factor evaluated once)."""
    total = Interval.point(0)
    cache: Dict[object, Interval] = {}
    for m, c in f.terms.items():
        term = Interval.point(c)
        for fac, e in m:
            v = cache.get(fac)
            if v is None:
                v = ia_dense(fac.dense, box)
                cache[fac] = v
            term = term * (v ** e)
        total = total + term
    return total


def clamp_unit(i: Interval) -> Optional[Interval]:
    """Intersect with [0,1]; ``None`` stands for the empty interval."""
    return i.intersect(Interval(Fraction(0), Fraction(1)))


# ---------------------------------------------------------------------------
# enclosures


class _Derivs:
    """Memoized partial derivatives of one dense polynomial."""

    def __init__(self, f: Dense, names: Tuple[str, ...]):
        self.names = names
        self._cache: Dict[Tuple[str, ...], Dense] = {(): f}

    def get(self, path: Tuple[str, ...]) -> Dense:
        d = self._cache.get(path)
        if d is None:
            d = dense_derivative(self.get(path[:-1]), path[-1])
            self._cache[path] = d
        return d


def _midpoint_enclosure(derivs: _Derivs, path: Tuple[str, ...], box: Box, depth: int) -> Interval:
    """Mean-value enclosure; derivative ranges come from the same scheme one level down."""
    f = derivs.get(path)
    natural = ia_dense(f, box)
    if depth == 0 or not f:
        return natural
    mid = {n: iv.mid for n, iv in box.items()}
    acc = Interval.point(dense_eval(f, mid))
    for name in derivs.names:
        w = box[name].width
        if w == 0:
            continue
        d = _midpoint_enclosure(derivs, path + (name,), box, depth - 1)
        acc = acc + d * Interval(-w / 2, w / 2)
    return natural.intersect(acc) or natural


def _simplest_between(a: Fraction, b: Fraction) -> Fraction:
    """Rational with the smallest denominator in the closed interval [a, b]."""
    if a > b:
        a, b = b, a
    if a <= 0 <= b:
        return Fraction(0)
    if b < 0:
        return -_simplest_between(-b, -a)
    fl = a.numerator // a.denominator
    if Fraction(fl) == a:
        return a
    if fl + 1 <= b:
        return Fraction(fl + 1)
    # both in (fl, fl+1): recurse on reciprocals of the fractional parts
    inner = _simplest_between(1 / (b - fl), 1 / (a - fl))
    return fl + 1 / inner


# -- univariate exact critical points -----------------------------------------


def _to_coeffs(f: Dense, x: str) -> List[Fraction]:
    deg = dense_degree(f)
    cs = [Fraction(0)] * (deg + 1)
    for m, c in f.items():
        e = m[0][1] if m else 0
        cs[e] += c
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return cs


def _peval(cs: List[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(cs):
        acc = acc * x + c
    return acc


def _pderiv(cs: List[Fraction]) -> List[Fraction]:
    out = [c * i for i, c in enumerate(cs)][1:]
    return out or [Fraction(0)]


def _prem(a: List[Fraction], b: List[Fraction]) -> List[Fraction]:
    a = list(a)
    while len(a) >= len(b) and any(a):
        q = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] -= q * c
        a.pop()
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a or [Fraction(0)]


def _pgcd(a, b):
    while any(b):
        a, b = b, _prem(a, b)
    return [c / a[-1] for c in a]


def _pdiv(a, b):
    a = list(a)
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    while len(a) >= len(b) and any(a):
        c = a[-1] / b[-1]
        shift = len(a) - len(b)
        q[shift] = c
        for i, bc in enumerate(b):
            a[shift + i] -= c * bc
        a.pop()
    return q


def _sturm(cs):
    seq = [cs, _pderiv(cs)]
    while len(seq[-1]) > 1 or seq[-1][0] != 0:
        r = _prem(seq[-2], seq[-1])
        if not any(r):
            break
        seq.append([-c for c in r])
        if len(r) == 1:
            break
    return seq


def _variations(seq, x) -> int:
    signs = [v for v in (_peval(p, x) for p in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def _critical_values(f: Dense, x: str, lo: Fraction, hi: Fraction, tol: Fraction) -> Interval:
    """Exact range over [lo, hi] at rational critical points, tight enclosure elsewhere."""
    cs = _to_coeffs(f, x)
    vals = [_peval(cs, lo), _peval(cs, hi)]
    rng = Interval(min(vals), max(vals))
    d = _pderiv(cs)
    if len(d) <= 1:
        return rng
    # square-free part so that every root is simple and changes sign
    g = _pgcd(d, _pderiv(d)) if len(d) > 2 else [Fraction(1)]
    sq = _pdiv(d, g) if len(g) > 1 else d
    seq = _sturm(sq)
    roots: List[Fraction] = []
    isolating: List[Tuple[Fraction, Fraction]] = []
    work = [(lo, hi)]
    while work:
        a, b = work.pop()
        n = _variations(seq, a) - _variations(seq, b)
        if _peval(sq, b) == 0:
            roots.append(b)
            n -= 1
        if n <= 0:
            continue
        if n == 1:
            isolating.append((a, b))
            continue
        m = (a + b) / 2
        work.append((a, m))
        work.append((m, b))
    derivs = _Derivs(f, (x,))
    for a, b in isolating:
        sa = _peval(sq, a)
        for _ in range(200):
            r = _simplest_between(a, b)
            if a < r < b and _peval(sq, r) == 0:
                roots.append(r)
                break
            m = (a + b) / 2
            sm = _peval(sq, m)
            if sm == 0:
                roots.append(m)
                break
            if (sm > 0) == (sa > 0):
                a, sa = m, sm
            else:
                b = m
            enc = _midpoint_enclosure(derivs, (), {x: Interval(a, b)}, DERIVATIVE_DEPTH)
            if enc.width <= tol:
                rng = rng.hull(enc)
                break
        else:
            rng = rng.hull(_midpoint_enclosure(derivs, (), {x: Interval(a, b)}, DERIVATIVE_DEPTH))
    for r in roots:
        if lo <= r <= hi:
            rng = rng.hull(Interval.point(_peval(cs, r)))
    return rng


# -- generic branch and bound ---------------------------------------------------


def _branch_and_bound(f: Dense, box: Dict[str, Interval], tol: Fraction, budget: int) -> Interval:
    names = tuple(sorted(n for n, iv in box.items() if iv.width > 0))
    derivs = _Derivs(f, names)

    def enclose(b):
        return _midpoint_enclosure(derivs, (), b, DERIVATIVE_DEPTH)

    mid = {n: iv.mid for n, iv in box.items()}
    v = dense_eval(f, mid)
    best_lo, best_hi = v, v  # sampled range
    boxes = [(box, enclose(box))]
    processed = 1
    while processed < budget:
        enc_lo = min(e.lo for _, e in boxes)
        enc_hi = max(e.hi for _, e in boxes)
        gap_lo, gap_hi = best_lo - enc_lo, enc_hi - best_hi
        if gap_lo + gap_hi <= tol:
            break
        if gap_lo >= gap_hi:
            idx = min(range(len(boxes)), key=lambda i: boxes[i][1].lo)
        else:
            idx = max(range(len(boxes)), key=lambda i: boxes[i][1].hi)
        b, _ = boxes.pop(idx)
        name = max(names, key=lambda n: b[n].width)
        iv = b[name]
        for half in (Interval(iv.lo, iv.mid), Interval(iv.mid, iv.hi)):
            child = dict(b)
            child[name] = half
            e = enclose(child)
            s = dense_eval(f, {n: c.mid for n, c in child.items()})
            best_lo, best_hi = min(best_lo, s), max(best_hi, s)
            boxes.append((child, e))
            processed += 1
        boxes = [(bb, e) for bb, e in boxes if e.lo < best_lo or e.hi > best_hi]
        if not boxes:
            break
    lo = min([best_lo] + [e.lo for _, e in boxes])
    hi = max([best_hi] + [e.hi for _, e in boxes])
    return Interval(lo, hi)


def bound_box(f: Polynomial, box: Box, tol=Fraction(1, 10 ** 6), budget: int = BNB_BUDGET) -> Interval:
    """Sound enclosure of ``{f(u) : u in box}``.

    Exact for linear, low-dimensional multi-affine and univariate polynomials
    with rational critical points; otherwise a branch-and-bound enclosure whose
    overestimation is at most ``tol`` unless the box budget runs out.
    """
    tol = as_fraction(tol)
    dense = f.expand()
    fixed = {n: iv.lo for n, iv in box.items() if iv.is_point() and n in dense_variables(dense)}
    missing = dense_variables(dense) - set(box)
    if missing:
        raise KeyError(f"box does not cover parameter {sorted(missing)[0]!r}")
    if fixed:
        dense = dense_substitute(dense, fixed)
    names = dense_variables(dense)
    sub = {n: box[n] for n in names}
    if not names:
        return Interval.point(dense.get((), Fraction(0)))
    if dense_degree(dense) <= 1:
        return ia_dense(dense, sub)
    if dense_is_multiaffine(dense) and len(names) <= VERTEX_LIMIT:
        order = sorted(names)
        vals = [dense_eval(dense, dict(zip(order, corner)))
                for corner in itertools.product(*[(sub[n].lo, sub[n].hi) for n in order])]
        return Interval(min(vals), max(vals))
    if len(names) == 1:
        (x,) = names
        return _critical_values(dense, x, sub[x].lo, sub[x].hi, tol)
    return _branch_and_bound(dense, sub, tol, budget)
