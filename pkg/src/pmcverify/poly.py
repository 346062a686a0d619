"""Exact multivariate polynomials over rational coefficients.

Two representations live here:

* dense polynomials: ``dict`` mapping an exponent tuple ``((name, exp), ...)``
  (sorted by parameter name) to a :class:`fractions.Fraction` coefficient;
* :class:`Polynomial`: a sum of *factorized monomials*
  ``c * f_1^b_1 * ... * f_m^b_m`` whose bases are interned :class:`Factor`
  objects.  The factorized form is what the shortcut transformation builds and
  what grouping inspects syntactically; the dense form is used for evaluation
  of factors, equality and range bounding.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

Rational = Fraction
Exps = Tuple[Tuple[str, int], ...]
Dense = Dict[Exps, Fraction]

ONE_EXPS: Exps = ()


class MissingParameterError(KeyError):
    """Raised when an evaluation point does not assign a parameter."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"no value assigned to parameter {self.name!r}"


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats only enter through user code; keep their exact binary value
        return Fraction(x)
    return Fraction(x)


# ---------------------------------------------------------------------------
# dense polynomial helpers


def _mul_exps(a: Exps, b: Exps) -> Exps:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for name, e in b:
        d[name] = d.get(name, 0) + e
    return tuple(sorted(d.items()))


def dense_const(c) -> Dense:
    c = as_fraction(c)
    return {ONE_EXPS: c} if c else {}


def dense_var(name: str) -> Dense:
    return {((name, 1),): Fraction(1)}


def dense_add(a: Mapping[Exps, Fraction], b: Mapping[Exps, Fraction]) -> Dense:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def dense_scale(a: Mapping[Exps, Fraction], c) -> Dense:
    c = as_fraction(c)
    if not c:
        return {}
    return {m: v * c for m, v in a.items()}


def dense_mul(a: Mapping[Exps, Fraction], b: Mapping[Exps, Fraction]) -> Dense:
    out: Dense = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mul_exps(ma, mb)
            v = out.get(m, 0) + ca * cb
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def dense_pow(a: Mapping[Exps, Fraction], k: int) -> Dense:
    if k < 0:
        raise ValueError("negative exponent")
    result: Dense = {ONE_EXPS: Fraction(1)}
    base = dict(a)
    while k:
        if k & 1:
            result = dense_mul(result, base)
        k >>= 1
        if k:
            base = dense_mul(base, base)
    return result


def dense_eval(a: Mapping[Exps, Fraction], point: Mapping[str, Fraction]) -> Fraction:
    total = Fraction(0)
    for m, c in a.items():
        term = c
        for name, e in m:
            try:
                v = point[name]
            except KeyError:
                raise MissingParameterError(name) from None
            term *= as_fraction(v) ** e
        total += term
    return total


def dense_eval_float(a: Mapping[Exps, Fraction], point: Mapping[str, float]) -> float:
    total = 0.0
    for m, c in a.items():
        term = float(c)
        for name, e in m:
            term *= point[name] ** e
        total += term
    return total


def dense_derivative(a: Mapping[Exps, Fraction], name: str) -> Dense:
    out: Dense = {}
    for m, c in a.items():
        d = dict(m)
        e = d.get(name, 0)
        if not e:
            continue
        if e == 1:
            del d[name]
        else:
            d[name] = e - 1
        nm = tuple(sorted(d.items()))
        v = out.get(nm, 0) + c * e
        if v:
            out[nm] = v
        else:
            out.pop(nm, None)
    return out


def dense_substitute(a: Mapping[Exps, Fraction], values: Mapping[str, Fraction]) -> Dense:
    """Fix some parameters to rational values."""
    out: Dense = {}
    for m, c in a.items():
        rest = []
        for name, e in m:
            if name in values:
                c = c * as_fraction(values[name]) ** e
            else:
                rest.append((name, e))
        nm = tuple(rest)
        v = out.get(nm, 0) + c
        if v:
            out[nm] = v
        else:
            out.pop(nm, None)
    return out


def dense_variables(a: Mapping[Exps, Fraction]) -> frozenset:
    return frozenset(name for m in a for name, _ in m)


def dense_degree(a: Mapping[Exps, Fraction]) -> int:
    return max((sum(e for _, e in m) for m in a), default=0)


def dense_is_multiaffine(a: Mapping[Exps, Fraction]) -> bool:
    return all(e <= 1 for m in a for _, e in m)


def _monomial_order(m: Exps):
    # constant first, then higher total degree, then names
    return (bool(m), -sum(e for _, e in m), m)


def format_dense(a: Mapping[Exps, Fraction]) -> str:
    if not a:
        return "0"
    parts = []
    for m in sorted(a, key=_monomial_order):
        c = a[m]
        sign = "-" if c < 0 else "+"
        mag = -c if c < 0 else c
        body = "*".join(n if e == 1 else f"{n}^{e}" for n, e in m)
        if not body:
            text = _format_rational(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_format_rational(mag)}*{body}"
        parts.append((sign, text))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


def _format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# factors


class Factor:
    """Interned non-constant base polynomial of a factorized monomial.

    Two factors are the same object iff their expanded forms are identical.
    Instances are created through :func:`intern_factor` only.
    """

    __slots__ = ("key", "dense", "variables", "degree", "is_atomic", "_powers")

    def __init__(self, key: str, dense: Dense):
        self.key = key
        self.dense = dense
        self.variables = dense_variables(dense)
        self.degree = dense_degree(dense)
        self.is_atomic = len(dense) == 1
        self._powers: Dict[int, Dense] = {1: dense}

    def power(self, k: int) -> Dense:
        p = self._powers.get(k)
        if p is None:
            p = dense_pow(self.dense, k)
            self._powers[k] = p
        return p

    def __repr__(self) -> str:
        return f"Factor({self.key!r})"

    def __lt__(self, other: "Factor") -> bool:
        return self.key < other.key

    def __reduce__(self):
        return (intern_factor, (self.dense,))


_FACTORS: Dict[frozenset, Factor] = {}
_FACTOR_LOCK = threading.Lock()


def _normalize(dense: Mapping[Exps, Fraction]) -> Tuple[Fraction, Dense]:
    """Split ``dense`` into ``scale * normalized`` with leading coefficient 1."""
    lead = min(dense, key=_monomial_order)
    c = dense[lead]
    return c, {m: v / c for m, v in dense.items()}


def intern_factor(dense: Mapping[Exps, Fraction]) -> Factor:
    """Return the unique factor for an already-normalized dense polynomial."""
    fkey = frozenset(dense.items())
    f = _FACTORS.get(fkey)
    if f is not None:
        return f
    with _FACTOR_LOCK:
        f = _FACTORS.get(fkey)
        if f is None:
            f = Factor(format_dense(dense), dict(dense))
            _FACTORS[fkey] = f
    return f


# ---------------------------------------------------------------------------
# factorized polynomials

Mono = Tuple[Tuple[Factor, int], ...]


def _mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    d: Dict[Factor, int] = dict(a)
    for f, e in b:
        d[f] = d.get(f, 0) + e
    return tuple(sorted(d.items(), key=lambda fe: fe[0].key))


def mono_degree(m: Mono) -> int:
    return sum(f.degree * e for f, e in m)


def mono_dense(m: Mono) -> Dense:
    out: Dense = {ONE_EXPS: Fraction(1)}
    for f, e in m:
        out = dense_mul(out, f.power(e))
    return out


def format_mono(m: Mono) -> str:
    parts = []
    for f, e in m:
        # atomic factors are bare parameters; compound ones need parentheses
        base = f.key if f.is_atomic else f"({f.key})"
        parts.append(base if e == 1 else f"{base}^{e}")
    return "*".join(parts)


class Polynomial:
    """Immutable sum of factorized monomials with rational coefficients.

    The zero polynomial has no terms.  Equality is semantic (expanded forms
    are compared); :meth:`same_terms` compares the factorized structure.
    """

    __slots__ = ("_terms", "_dense", "_hash")

    def __init__(self, terms: Optional[Mapping[Mono, Fraction]] = None):
        clean: Dict[Mono, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = as_fraction(c)
                if c:
                    clean[m] = clean.get(m, 0) + c
                    if not clean[m]:
                        del clean[m]
        self._terms = clean
        self._dense: Optional[Dense] = None
        self._hash: Optional[int] = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, c) -> "Polynomial":
        c = as_fraction(c)
        return cls({(): c} if c else None)

    @classmethod
    def param(cls, name: str) -> "Polynomial":
        return cls({((intern_factor(dense_var(name)), 1),): Fraction(1)})

    @classmethod
    def from_dense(cls, dense: Mapping[Exps, Fraction], as_factor: bool = True) -> "Polynomial":
        """Build from an expanded polynomial.

        Constants and single monomials become atomic products; anything else
        becomes one interned factor when ``as_factor`` is set, otherwise a sum
        of atomic monomials.
        """
        dense = {m: as_fraction(c) for m, c in dense.items() if c}
        if not dense:
            return cls()
        if len(dense) == 1 or not as_factor:
            terms = {}
            for m, c in dense.items():
                mono = tuple(sorted(((intern_factor(dense_var(n)), e) for n, e in m),
                                    key=lambda fe: fe[0].key))
                terms[mono] = c
            return cls(terms)
        scale, norm = _normalize(dense)
        return cls({((intern_factor(norm), 1),): scale})

    # -- structure --------------------------------------------------------
    @property
    def terms(self) -> Mapping[Mono, Fraction]:
        return self._terms

    def iter_terms(self) -> Iterator[Tuple[Fraction, Mono]]:
        for m, c in self._terms.items():
            yield c, m

    def factors(self) -> frozenset:
        return frozenset(f for m in self._terms for f, _ in m)

    def variables(self) -> frozenset:
        out = set()
        for m in self._terms:
            for f, _ in m:
                out |= f.variables
        return frozenset(out)

    def is_atomic_sum(self) -> bool:
        """True if every factor is a bare parameter (expanded form)."""
        return all(f.is_atomic for m in self._terms for f, _ in m)

    def expand(self) -> Dense:
        if self._dense is None:
            out: Dense = {}
            for m, c in self._terms.items():
                out = dense_add(out, dense_scale(mono_dense(m), c))
            self._dense = out
        return self._dense

    def is_zero(self) -> bool:
        return not self._terms or not self.expand()

    def is_constant(self) -> bool:
        if not self._terms:
            return True
        if all(not m for m in self._terms):
            return True
        return all(not m for m in self.expand())

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.expand().get(ONE_EXPS, Fraction(0))

    def degree(self) -> int:
        return dense_degree(self.expand())

    def same_terms(self, other: "Polynomial") -> bool:
        return self._terms == other._terms

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "Polynomial":
        other = _coerce(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0) + c
        out = Polynomial(terms)
        # collapse sums like p + (1 - p) that are constant in disguise
        if len(out._terms) > 1 and any(out._terms) and out.is_constant():
            return Polynomial.const(out.constant_value())
        return out

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "Polynomial":
        other = _coerce(other)
        terms: Dict[Mono, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _mono_mul(ma, mb)
                terms[m] = terms.get(m, 0) + ca * cb
        return Polynomial(terms)

    __rmul__ = __mul__

    def scale(self, c) -> "Polynomial":
        c = as_fraction(c)
        if not c:
            return Polynomial()
        return Polynomial({m: v * c for m, v in self._terms.items()})

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        if len(self._terms) == 1:
            ((m, c),) = self._terms.items()
            return Polynomial({tuple((f, e * k) for f, e in m): c ** k})
        result = Polynomial.const(1)
        for _ in range(k):
            result = result * self
        return result

    # -- evaluation -------------------------------------------------------
    def eval(self, point: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        cache: Dict[Factor, Fraction] = {}
        for m, c in self._terms.items():
            term = c
            for f, e in m:
                v = cache.get(f)
                if v is None:
                    v = dense_eval(f.dense, point)
                    cache[f] = v
                term *= v ** e
            total += term
        return total

    def eval_float(self, point: Mapping[str, float]) -> float:
        total = 0.0
        for m, c in self._terms.items():
            term = float(c)
            for f, e in m:
                term *= dense_eval_float(f.dense, point) ** e
            total += term
        return total

    def derivative(self, name: str) -> "Polynomial":
        """Formal partial derivative; the product rule keeps factors intact."""
        out: Dict[Mono, Fraction] = {}
        for m, c in self._terms.items():
            for i, (f, e) in enumerate(m):
                if name not in f.variables:
                    continue
                df = Polynomial.from_dense(dense_derivative(f.dense, name))
                rest = list(m)
                if e == 1:
                    rest.pop(i)
                else:
                    rest[i] = (f, e - 1)
                base = Polynomial({tuple(rest): c * e})
                for dm, dc in (base * df)._terms.items():
                    out[dm] = out.get(dm, 0) + dc
        return Polynomial(out)

    # -- comparison / display --------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self._terms == other._terms:
            return True
        return self.expand() == other.expand()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.expand().items()))
        return self._hash

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({format_polynomial(self)!r})"


def _coerce(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    return Polynomial.const(x)


def _term_order(item):
    m, _ = item
    return (bool(m), -mono_degree(m), tuple(f.key for f, _ in m), tuple(e for _, e in m))


def format_polynomial(p: Polynomial) -> str:
    """Render in the expression grammar, keeping the factorized structure."""
    if not p.terms:
        return "0"
    items = sorted(p.terms.items(), key=_term_order)
    if len(items) == 1:
        (m, c), = items
        if c == 1 and len(m) == 1 and m[0][1] == 1:
            # a lone factor is written bare; the parser re-interns it
            return m[0][0].key
    parts = []
    for m, c in items:
        sign = "-" if c < 0 else "+"
        mag = -c if c < 0 else c
        body = format_mono(m)
        if not body:
            text = _format_rational(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_format_rational(mag)}*{body}"
        parts.append((sign, text))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


# ---------------------------------------------------------------------------
# common factors for transition grouping


def _carrier_candidates(fs: Sequence[Polynomial], positive_only: bool):
    counts: Dict[Mono, int] = {}
    for f in fs:
        for m, c in f.terms.items():
            if not m or (positive_only and c <= 0):
                continue
            counts[m] = counts.get(m, 0) + 1
    cands = [m for m, k in counts.items() if k >= 2]
    # deepest monomial first, then most carriers, then factor ids
    cands.sort(key=lambda m: (-mono_degree(m), -counts[m],
                              tuple((f.key, e) for f, e in m)))
    return cands


def common_factor(fs: Sequence[Polynomial], positive_only: bool = False
                  ) -> Optional[Tuple[Polynomial, Tuple[Tuple[Polynomial, Fraction], ...]]]:
    """Find a factorized monomial shared by at least two of ``fs``.

    Returns ``(f, ((g_1, c_1), ...))`` with ``fs[i] == g_i + c_i * f`` for
    every input (``c_i == 0`` for inputs without the monomial), or ``None``.
    With ``positive_only`` only strictly positive coefficients count as
    carriers, so that ``c_i / sum(c)`` are probabilities.
    """
    if len(fs) < 2:
        raise ValueError("common_factor needs at least two polynomials")
    cands = _carrier_candidates(fs, positive_only)
    if not cands:
        return None
    m = cands[0]
    f = Polynomial({m: Fraction(1)})
    parts = []
    for p in fs:
        c = p.terms.get(m, Fraction(0))
        if positive_only and c < 0:
            c = Fraction(0)
        if c:
            rest = dict(p.terms)
            del rest[m]
            parts.append((Polynomial(rest), c))
        else:
            parts.append((p, Fraction(0)))
    return f, tuple(parts)


def eval_poly(f: Polynomial, point: Mapping[str, Fraction]) -> Fraction:
    return f.eval(point)


def add(f: Polynomial, g: Polynomial) -> Polynomial:
    return f + g


def mul(f: Polynomial, g: Polynomial) -> Polynomial:
    return f * g


def scale(f: Polynomial, c) -> Polynomial:
    return f.scale(c)


def derivative(f: Polynomial, name: str) -> Polynomial:
    return f.derivative(name)


def poly_sum(items: Iterable[Polynomial]) -> Polynomial:
    total = Polynomial()
    for p in items:
        total = total + p
    return total
