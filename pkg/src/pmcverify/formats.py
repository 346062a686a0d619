"""Text formats: expressions, .pmc models, interval models, regions and properties."""
from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .bounds import Interval
from .model import IMC, PMC, ModelError
from .poly import Polynomial, format_polynomial
from .region import Region


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


# ---------------------------------------------------------------------------
# expressions

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


def _tokenize(text: str, line: int, col0: int):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            j = pos
            while j < len(text) and text[j].isspace():
                j += 1
            raise ParseError(f"unexpected character {text[j]!r}", line, col0 + j)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), col0 + start))
        pos = m.end()
    out.append(("end", "", col0 + len(text)))
    return out


class _ExprParser:
    def __init__(self, text: str, params: Optional[Sequence[str]], line: int, col: int):
        self.toks = _tokenize(text, line, col)
        self.i = 0
        self.params = set(params) if params is not None else None
        self.line = line

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.line, tok[2])

    def parse(self) -> Polynomial:
        p = self.sum()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return p

    def sum(self) -> Polynomial:
        acc = self.product()
        nterms = 1
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.product()
            acc = acc + rhs if op == "+" else acc - rhs
            nterms += 1
        if nterms >= 2:
            acc = _intern_atomic_sum(acc)
        return acc

    def product(self) -> Polynomial:
        acc = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                acc = acc * rhs
            else:
                if not rhs.is_constant():
                    self.error("division by a non-constant expression", tok)
                c = rhs.constant_value()
                if c == 0:
                    self.error("division by zero", tok)
                acc = acc.scale(1 / c)
        return acc

    def unary(self) -> Polynomial:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("exponent must be a non-negative integer literal", tok)
            base = base ** int(tok[1])
        return base

    def atom(self) -> Polynomial:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Polynomial.const(Fraction(val))
        if kind == "name":
            if self.params is not None and val not in self.params:
                self.error(f"unknown parameter {val!r}", tok)
            return Polynomial.param(val)
        if kind == "op" and val == "(":
            inner = self.sum()
            if self.take()[1] != ")":
                self.error("expected ')'", self.toks[self.i - 1])
            return inner
        self.error(f"unexpected {val or 'end of input'!r}", tok)


def _intern_atomic_sum(p: Polynomial) -> Polynomial:
    # a written sum of plain monomials such as 1 - p becomes one factor
    if len(p.terms) >= 2 and p.is_atomic_sum() and not p.is_constant():
        return Polynomial.from_dense(p.expand(), as_factor=True)
    return p


def parse_expression(text: str, params: Optional[Sequence[str]] = None, line: int = 1, col: int = 1) -> Polynomial:
    return _ExprParser(text, params, line, col).parse()


# ---------------------------------------------------------------------------
# models

def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        if body.strip():
            yield n, raw, body


def _header(text: str):
    """Shared declarations of .pmc and .imc files."""
    decl = {"params": [], "dparams": [], "states": [], "init": None, "target": []}
    trans = []
    for n, raw, body in _lines(text):
        words = body.split()
        key = words[0]
        if key in ("params", "dparams", "states", "target"):
            decl[key] += words[1:]
        elif key == "init":
            if len(words) != 2:
                raise ParseError("init expects one state", n, raw.index("init") + 1)
            decl["init"] = words[1]
        elif key == "trans":
            head, sep, expr = body.partition(":")
            hw = head.split()
            if not sep or len(hw) != 3:
                raise ParseError("expected 'trans <src> <dst> : <expr>'", n, raw.index("trans") + 1)
            trans.append((n, hw[1], hw[2], expr, len(head) + 2))
        else:
            raise ParseError(f"unknown declaration {key!r}", n, raw.index(key) + 1)
    if decl["init"] is None:
        raise ParseError("missing init declaration", 1, 1)
    if not decl["states"]:
        raise ParseError("missing states declaration", 1, 1)
    known = set(decl["states"])
    for n, s, t, _, _ in trans:
        for x in (s, t):
            if x not in known:
                raise ParseError(f"undeclared state {x!r}", n, 1)
    return decl, trans


def parse_model(text: str) -> PMC:
    decl, trans = _header(text)
    params = decl["params"] + decl["dparams"]
    rows: Dict[str, Dict[str, Polynomial]] = {}
    for n, s, t, expr, col in trans:
        if t in rows.get(s, {}):
            raise ParseError(f"duplicate transition {s} -> {t}", n, 1)
        rows.setdefault(s, {})[t] = parse_expression(expr, params, n, col)
    try:
        return PMC(tuple(decl["states"]), tuple(params), decl["init"], rows,
                   frozenset(decl["target"]), frozenset(decl["dparams"]))
    except ModelError as e:
        raise ParseError(str(e), 1, 1) from None


def serialize_model(D: PMC) -> str:
    cont = [p for p in D.params if p not in D.discrete]
    disc = [p for p in D.params if p in D.discrete]
    lines = []
    if cont:
        lines.append("params " + " ".join(cont))
    if disc:
        lines.append("dparams " + " ".join(disc))
    lines.append("states " + " ".join(D.states))
    lines.append(f"init {D.init}")
    lines.append("target " + " ".join(s for s in D.states if s in D.good))
    for s in D.states:
        for t, f in D.trans[s].items():
            lines.append(f"trans {s} {t} : {format_polynomial(f)}")
    return "\n".join(lines) + "\n"


_INTERVAL = re.compile(r"^\s*\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]\s*$")


def parse_imc(text: str) -> IMC:
    decl, trans = _header(text)
    rows: Dict[str, Dict[str, Interval]] = {}
    for n, s, t, expr, col in trans:
        m = _INTERVAL.match(expr)
        try:
            if m:
                iv = Interval(_rational(m.group(1)), _rational(m.group(2)))
            else:
                iv = Interval.point(_rational(expr))
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"bad interval: {e}", n, col) from None
        if iv.lo < 0 or iv.hi > 1:
            raise ParseError("interval not inside [0,1]", n, col)
        rows.setdefault(s, {})[t] = iv
    I = IMC(tuple(decl["states"]), decl["init"], rows, frozenset(decl["target"]))
    from .imc import zero_states
    I.bad = frozenset(zero_states(I))
    return I


def serialize_imc(I: IMC) -> str:
    lines = ["states " + " ".join(I.states), f"init {I.init}",
             "target " + " ".join(s for s in I.states if s in I.good)]
    for s in I.states:
        for t, iv in I.trans[s].items():
            lines.append(f"trans {s} {t} : [{iv.lo}, {iv.hi}]")
    return "\n".join(lines) + "\n"


def _rational(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        a, b = text.split("/", 1)
        return Fraction(a.strip()) / Fraction(b.strip())
    return Fraction(text)


# ---------------------------------------------------------------------------
# regions

_RANGE = re.compile(r"^\s*(?P<lo>[^<=]+?)\s*<=\s*(?P<name>[A-Za-z_][A-Za-z0-9_*?]*)\s*<=\s*(?P<hi>[^<=]+?)\s*$")
_EQ = re.compile(r"^\s*(?P<name>[A-Za-z_][A-Za-z0-9_*?]*)\s*=\s*(?P<v>[^=]+?)\s*$")
_SET = re.compile(r"^\s*(?P<name>[A-Za-z_][A-Za-z0-9_*?]*)\s+in\s+\{(?P<vals>[^}]*)\}\s*$")


def _split_top(text: str) -> List[Tuple[str, int]]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((text[start:i], start))
            start = i + 1
    parts.append((text[start:], start))
    return parts


def parse_region(text: str, params: Sequence[str], discrete=frozenset()) -> Region:
    """Parse ``0.3 <= p <= 0.6, k in {0,1}``; names may use ``*`` wildcards."""
    bounds: Dict[str, Interval] = {}
    for chunk, col in _split_top(text):
        if not chunk.strip():
            continue
        m = _RANGE.match(chunk) or _EQ.match(chunk) or _SET.match(chunk)
        if not m:
            raise ParseError(f"cannot parse region constraint {chunk.strip()!r}", 1, col + 1)
        pat = m.group("name")
        names = [p for p in params if fnmatch.fnmatchcase(p, pat)]
        if not names:
            raise ParseError(f"parameter {pat!r} does not occur in the model", 1, col + 1)
        try:
            if "lo" in m.groupdict() and m.groupdict().get("lo") is not None:
                iv = Interval(_rational(m.group("lo")), _rational(m.group("hi")))
            elif m.groupdict().get("v") is not None:
                iv = Interval.point(_rational(m.group("v")))
            else:
                vals = sorted(_rational(v) for v in m.group("vals").split(",") if v.strip())
                if not vals or any(v.denominator != 1 for v in vals) or vals != list(
                        map(Fraction, range(int(vals[0]), int(vals[-1]) + 1))):
                    raise ValueError("discrete set must be a contiguous integer range")
                iv = Interval(vals[0], vals[-1])
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(str(e), 1, col + 1) from None
        for n in names:
            if n in discrete and (iv.lo.denominator != 1 or iv.hi.denominator != 1):
                raise ParseError(f"discrete parameter {n!r} needs integer bounds", 1, col + 1)
            bounds[n] = iv
    missing = [p for p in params if p not in bounds]
    if missing:
        raise ParseError(f"region does not bound parameter {missing[0]!r}", 1, 1)
    return Region(tuple((p, bounds[p]) for p in params), frozenset(discrete))


# ---------------------------------------------------------------------------
# properties

_PROP = re.compile(r'^\s*P\s*(?P<op><=|>=|<|>)\s*(?P<thr>[0-9./eE+-]+)\s*(?:\[\s*F\s+"(?P<label>[^"]+)"\s*\])?\s*$')


def parse_property(text: str):
    from .engine import Property
    m = _PROP.match(text)
    if not m:
        raise ParseError("expected a property like P<0.2 [F \"good\"]", 1, 1)
    try:
        thr = _rational(m.group("thr"))
    except (ValueError, ZeroDivisionError):
        raise ParseError("bad threshold", 1, m.start("thr") + 1) from None
    if not 0 <= thr <= 1:
        raise ParseError("threshold must lie in [0,1]", 1, m.start("thr") + 1)
    return Property(m.group("op"), thr, m.group("label") or "good")
