"""Holomorphic vector fields as expression trees.

Fields are trees over {complex constants, coordinates z1..zn, + - * /,
integer powers, inner(z, c) for a constant vector c}; no conjugation of
variables is representable, so every field is holomorphic by construction.
Differentiation is exact and symbolic, which keeps certification margins at
full double precision, and the tree algebra is closed under conjugation by
projective automorphisms (the pullback of a rational field is rational).

Expression grammar accepted by :func:`parse_field` (EBNF):

    field      = "(" expr { "," expr } ")" | expr ;
    expr       = term { ("+" | "-") term } ;
    term       = factor { ("*" | "/") factor } ;
    factor     = "-" factor | power ;
    power      = atom [ "^" integer ] ;
    atom       = number | "i" | variable | "(" expr ")"
               | "inner" "(" "z" "," "[" const { "," const } "]" ")" ;
    variable   = "z" digit { digit } ;        (* z1 .. zn, 1-based *)
    number     = float [ "i" ] ;              (* "2", "0.5", "2i", "1.5e-3i" *)
    const      = expr ;                       (* constant subexpression *)

Complex literals are written additively, e.g. ``1+2i``; ``conj`` is
rejected with a holomorphy error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError, HolomorphyError, ParseError
from .geometry import ProjectiveAutomorphism, as_cvec

# Division guard: denominators smaller than this raise EvaluationError.
# Boundary poles (e.g. at z1 = 1) must stay evaluable on the radial grids
# used for slope estimates, so the guard sits far below 1 - radius there.
DIV_EPS = 1e-13


class Expr:
    """Base expression node. Immutable; supports operator sugar."""

    __slots__ = ()

    def value(self, z: np.ndarray) -> complex:
        raise NotImplementedError

    def diff(self, j: int) -> "Expr":
        raise NotImplementedError

    def subs(self, repl: tuple["Expr", ...]) -> "Expr":
        raise NotImplementedError

    # precedence for the printer: 0 additive, 1 multiplicative, 2 power, 3 atom
    def _prec(self) -> int:
        raise NotImplementedError

    def __add__(self, other):
        return _add(self, _wrap(other))

    def __radd__(self, other):
        return _add(_wrap(other), self)

    def __sub__(self, other):
        return _sub(self, _wrap(other))

    def __rsub__(self, other):
        return _sub(_wrap(other), self)

    def __mul__(self, other):
        return _mul(self, _wrap(other))

    def __rmul__(self, other):
        return _mul(_wrap(other), self)

    def __truediv__(self, other):
        return _div(self, _wrap(other))

    def __rtruediv__(self, other):
        return _div(_wrap(other), self)

    def __pow__(self, n):
        return _pow(self, n)

    def __neg__(self):
        return _mul(Const(-1.0), self)


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(complex(x))


@dataclass(frozen=True)
class Const(Expr):
    v: complex

    def value(self, z):
        return self.v

    def diff(self, j):
        return Const(0.0)

    def subs(self, repl):
        return self

    def _prec(self):
        if self.v.real != 0.0 and self.v.imag != 0.0:
            return 0
        if self.v.real < 0.0 or self.v.imag < 0.0:
            return 0
        return 3

    def __str__(self):
        return _fmt_const(self.v)


@dataclass(frozen=True)
class Coord(Expr):
    j: int  # zero-based

    def value(self, z):
        return complex(z[self.j])

    def diff(self, j):
        return Const(1.0 if j == self.j else 0.0)

    def subs(self, repl):
        return repl[self.j]

    def _prec(self):
        return 3

    def __str__(self):
        return f"z{self.j + 1}"


@dataclass(frozen=True)
class Inner(Expr):
    """Hermitian pairing <z, c> = sum_j z_j conj(c_j) with a constant vector."""

    coeffs: tuple

    def value(self, z):
        return complex(sum(z[j] * np.conj(c) for j, c in enumerate(self.coeffs)))

    def diff(self, j):
        return Const(complex(np.conj(self.coeffs[j])))

    def subs(self, repl):
        out = Const(0.0)
        for j, c in enumerate(self.coeffs):
            out = _add(out, _mul(Const(complex(np.conj(c))), repl[j]))
        return out

    def _prec(self):
        return 3

    def __str__(self):
        inside = ", ".join(_fmt_const(complex(c)) for c in self.coeffs)
        return f"inner(z, [{inside}])"


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def value(self, z):
        return self.a.value(z) + self.b.value(z)

    def diff(self, j):
        return _add(self.a.diff(j), self.b.diff(j))

    def subs(self, repl):
        return _add(self.a.subs(repl), self.b.subs(repl))

    def _prec(self):
        return 0

    def __str__(self):
        return f"{_paren(self.a, 0)} + {_paren(self.b, 1, tight=True)}"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def value(self, z):
        return self.a.value(z) - self.b.value(z)

    def diff(self, j):
        return _sub(self.a.diff(j), self.b.diff(j))

    def subs(self, repl):
        return _sub(self.a.subs(repl), self.b.subs(repl))

    def _prec(self):
        return 0

    def __str__(self):
        return f"{_paren(self.a, 0)} - {_paren(self.b, 1, tight=True)}"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def value(self, z):
        return self.a.value(z) * self.b.value(z)

    def diff(self, j):
        return _add(_mul(self.a.diff(j), self.b), _mul(self.a, self.b.diff(j)))

    def subs(self, repl):
        return _mul(self.a.subs(repl), self.b.subs(repl))

    def _prec(self):
        return 1

    def __str__(self):
        return f"{_paren(self.a, 1)}*{_paren(self.b, 2, tight=True)}"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def value(self, z):
        den = self.b.value(z)
        if abs(den) < DIV_EPS:
            raise EvaluationError(f"denominator {den} vanishes at z = {z}")
        return self.a.value(z) / den

    def diff(self, j):
        num = _sub(_mul(self.a.diff(j), self.b), _mul(self.a, self.b.diff(j)))
        return _div(num, _mul(self.b, self.b))

    def subs(self, repl):
        return _div(self.a.subs(repl), self.b.subs(repl))

    def _prec(self):
        return 1

    def __str__(self):
        return f"{_paren(self.a, 1)}/{_paren(self.b, 2, tight=True)}"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    n: int

    def value(self, z):
        return self.base.value(z) ** self.n

    def diff(self, j):
        if self.n == 0:
            return Const(0.0)
        return _mul(_mul(Const(float(self.n)), _pow(self.base, self.n - 1)), self.base.diff(j))

    def subs(self, repl):
        return _pow(self.base.subs(repl), self.n)

    def _prec(self):
        return 2

    def __str__(self):
        return f"{_paren(self.base, 3)}^{self.n}"


def _is_const(e: Expr, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.v == v)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.v + b.v)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.v - b.v)
    if _is_const(b, 0):
        return a
    return Sub(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.v * b.v)
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(0.0)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1):
        return a
    if _is_const(a, 0) and not _is_const(b, 0):
        return Const(0.0)
    if _is_const(a) and _is_const(b) and b.v != 0:
        return Const(a.v / b.v)
    return Div(a, b)


def _pow(base: Expr, n) -> Expr:
    n = int(n)
    if n < 0:
        raise DomainError("powers must have nonnegative integer exponents; use division")
    if n == 0:
        return Const(1.0)
    if n == 1:
        return base
    if _is_const(base):
        return Const(base.v ** n)
    return Pow(base, n)


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_const(v: complex) -> str:
    if v.imag == 0.0:
        return _fmt_num(v.real)
    if v.real == 0.0:
        return _fmt_num(v.imag) + "i"
    sign = "+" if v.imag >= 0 else "-"
    return f"{_fmt_num(v.real)} {sign} {_fmt_num(abs(v.imag))}i"


def _paren(e: Expr, level: int, tight: bool = False) -> str:
    # tight: right operand of a non-commutative/equal-precedence spot
    p = e._prec()
    if p < level or (tight and p == level and p < 3):
        return f"({e})"
    return str(e)


class VectorField:
    """A holomorphic vector field on the ball, one expression per component."""

    def __init__(self, components, dim: int | None = None):
        comps = tuple(_wrap(c) for c in components)
        if not comps:
            raise DomainError("a vector field needs at least one component")
        self.components = comps
        self.dim = dim if dim is not None else len(comps)
        if self.dim != len(comps):
            raise DomainError(f"expected {self.dim} components, got {len(comps)}")
        self._partials = None
        self.pole_free_on_samples = self._probe_poles()

    def _probe_poles(self) -> bool:
        # Construction-time check of division nodes on a fixed sample set;
        # an actual pole hit still raises at evaluation time, not here.
        rng = np.random.default_rng(20240923)
        try:
            for _ in range(32):
                x = rng.normal(size=2 * self.dim)
                x *= rng.uniform(0.0, 1.0 - 1e-9) ** (1.0 / (2 * self.dim)) / np.linalg.norm(x)
                z = x[: self.dim] + 1j * x[self.dim:]
                for c in self.components:
                    c.value(z)
        except EvaluationError:
            return False
        return True

    def __call__(self, z) -> np.ndarray:
        z = as_cvec(z, self.dim)
        return np.array([c.value(z) for c in self.components], dtype=complex)

    def jacobian(self, z) -> np.ndarray:
        """Exact holomorphic Jacobian d F at z from the symbolic partials."""
        z = as_cvec(z, self.dim)
        if self._partials is None:
            self._partials = tuple(
                tuple(c.diff(j) for j in range(self.dim)) for c in self.components
            )
        return np.array(
            [[p.value(z) for p in row] for row in self._partials], dtype=complex
        )

    def text(self) -> str:
        return "(" + ", ".join(str(c) for c in self.components) + ")"

    def __add__(self, other: "VectorField") -> "VectorField":
        if self.dim != other.dim:
            raise DomainError("cannot add fields of different dimensions")
        return VectorField(
            [_add(a, b) for a, b in zip(self.components, other.components)]
        )

    def __neg__(self) -> "VectorField":
        return VectorField([-c for c in self.components])

    def __repr__(self):
        return f"VectorField({self.text()!r})"


def quadratic_field(a, big_a, b) -> VectorField:
    """The field G(z) = a - <z,a> z - [A z + <z,b> z].

    Linear in (a, A, b); with a = b = 0 and A = I this is -z.
    """
    a = as_cvec(a)
    n = a.size
    big_a = np.asarray(big_a, dtype=complex)
    if big_a.shape != (n, n):
        raise DomainError(f"matrix must be {n}x{n}, got {big_a.shape}")
    b = as_cvec(b, n)
    comps = []
    inner_a = Inner(tuple(a))
    inner_b = Inner(tuple(b))
    for i in range(n):
        lin = Const(0.0)
        for j in range(n):
            lin = _add(lin, _mul(Const(complex(big_a[i, j])), Coord(j)))
        expr = _sub(
            _sub(Const(complex(a[i])), _mul(inner_a, Coord(i))),
            _add(lin, _mul(inner_b, Coord(i))),
        )
        comps.append(expr)
    return VectorField(comps)


def berkson_porta_field(b: complex, p: Expr | complex) -> VectorField:
    """Disc field G(z) = (z - b)(conj(b) z - 1) p(z), a generator iff Re p >= 0."""
    b = complex(b)
    if abs(b) > 1.0 + 1e-12:
        raise DomainError(f"base point must lie in the closed disc, got |b| = {abs(b)}")
    zeta = Coord(0)
    expr = _mul(_mul(_sub(zeta, Const(b)), _sub(_mul(Const(np.conj(b)), zeta), Const(1.0))), _wrap(p))
    return VectorField([expr])


def _automorphism_exprs(m: np.ndarray) -> tuple[list[Expr], Expr]:
    """Component expressions and denominator of a projective automorphism."""
    n = m.shape[0] - 1
    den = Const(complex(m[n, n]))
    for j in range(n):
        den = _add(den, _mul(Const(complex(m[n, j])), Coord(j)))
    comps = []
    for i in range(n):
        num = Const(complex(m[i, n]))
        for j in range(n):
            num = _add(num, _mul(Const(complex(m[i, j])), Coord(j)))
        comps.append(_div(num, den))
    return comps, den


def conjugate_field(f: VectorField, eta: ProjectiveAutomorphism) -> VectorField:
    """Pullback of ``f`` by ``eta``: z -> d(eta^{-1})_{eta(z)} . f(eta(z)).

    The pullback generates the conjugated flow eta^{-1} o Phi_t o eta and is
    again a rational expression tree.
    """
    if f.dim != eta.dim:
        raise DomainError("field and automorphism dimensions differ")
    n = f.dim
    eta_comps, _ = _automorphism_exprs(eta.matrix)
    eta_comps = tuple(eta_comps)
    w = np.linalg.inv(eta.matrix)
    inv_comps, _ = _automorphism_exprs(w)
    # Jacobian entries of eta^{-1} as expressions in w: A'_ij/q' - inv_i c'_j/q'
    den = Const(complex(w[n, n]))
    for j in range(n):
        den = _add(den, _mul(Const(complex(w[n, j])), Coord(j)))
    out = []
    for i in range(n):
        acc = Const(0.0)
        for j in range(n):
            jac_ij = _div(
                _sub(Const(complex(w[i, j])), _mul(inv_comps[i], Const(complex(w[n, j])))),
                den,
            )
            acc = _add(acc, _mul(jac_ij.subs(eta_comps), f.components[j].subs(eta_comps)))
        out.append(acc)
    return VectorField(out)


# --- parser ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),\[\]]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.tokens = _tokenize(text)
        self.k = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.next()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text!r}", pos)

    def parse_field(self) -> list[Expr]:
        # A leading "(" may open a component list or just a parenthesized
        # subexpression ("(1+z1)/(1-z1)"); try the list reading first and
        # fall back to a single expression on trailing input.
        if self.peek()[1] == "(":
            save = self.k
            try:
                self.next()
                comps = [self.parse_expr()]
                while self.peek()[1] == ",":
                    self.next()
                    comps.append(self.parse_expr())
                self.expect(")")
                if self.peek()[0] == "eof":
                    return comps
            except HolomorphyError:
                raise
            except ParseError:
                pass
            self.k = save
        comps = [self.parse_expr()]
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected trailing input {text!r}", pos)
        return comps

    def parse_expr(self) -> Expr:
        e = self.parse_term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.parse_term()
            e = _add(e, rhs) if op == "+" else _sub(e, rhs)
        return e

    def parse_term(self) -> Expr:
        e = self.parse_factor()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            rhs = self.parse_factor()
            e = _mul(e, rhs) if op == "*" else _div(e, rhs)
        return e

    def parse_factor(self) -> Expr:
        if self.peek()[1] == "-":
            self.next()
            return -self.parse_factor()
        return self.parse_power()

    def parse_power(self) -> Expr:
        e = self.parse_atom()
        if self.peek()[1] == "^":
            self.next()
            kind, text, pos = self.next()
            if kind != "num" or not text.isdigit():
                raise ParseError(f"expected a nonnegative integer exponent, found {text!r}", pos)
            e = _pow(e, int(text))
        return e

    def parse_atom(self) -> Expr:
        kind, text, pos = self.next()
        if kind == "num":
            if text.endswith("i"):
                return Const(1j * float(text[:-1]))
            return Const(float(text))
        if kind == "ident":
            if text == "i":
                return Const(1j)
            if text == "conj":
                raise HolomorphyError(
                    "conj() is not holomorphic and cannot appear in a field", pos
                )
            if text == "inner":
                return self.parse_inner(pos)
            m = re.fullmatch(r"z(\d+)", text)
            if m:
                j = int(m.group(1))
                if not 1 <= j <= self.dim:
                    raise ParseError(
                        f"variable {text} out of range for dimension {self.dim}", pos
                    )
                return Coord(j - 1)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if text == "(":
            e = self.parse_expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {text!r}", pos)

    def parse_inner(self, pos: int) -> Expr:
        self.expect("(")
        kind, text, zpos = self.next()
        if text != "z":
            raise ParseError("inner() expects the literal argument z first", zpos)
        self.expect(",")
        self.expect("[")
        coeffs = [self.parse_const_entry()]
        while self.peek()[1] == ",":
            self.next()
            coeffs.append(self.parse_const_entry())
        self.expect("]")
        self.expect(")")
        if len(coeffs) != self.dim:
            raise ParseError(
                f"inner() vector has {len(coeffs)} entries, expected {self.dim}", pos
            )
        return Inner(tuple(coeffs))

    def parse_const_entry(self) -> complex:
        pos = self.peek()[2]
        e = self.parse_expr()
        if not isinstance(e, Const):
            raise ParseError("inner() vector entries must be constants", pos)
        return e.v


def parse_expression(text: str, dim: int) -> Expr:
    """Parse a single scalar holomorphic expression in z1..zdim."""
    parser = _Parser(text, dim)
    comps = parser.parse_field()
    if len(comps) != 1:
        raise ParseError(f"expected one expression, found {len(comps)} components")
    return comps[0]


def parse_field(text: str, dim: int) -> VectorField:
    """Parse a field like ``"(0, -z2/(1-z1))"`` into a VectorField."""
    comps = _Parser(text, dim).parse_field()
    if len(comps) != dim:
        raise ParseError(f"field has {len(comps)} components, expected {dim}")
    return VectorField(comps, dim)


def parse_point(text: str, dim: int) -> np.ndarray:
    """Parse a constant point like ``"(0.5, 0.3i)"``; variables are rejected."""
    comps = _Parser(text, dim).parse_field()
    if len(comps) != dim:
        raise ParseError(f"point has {len(comps)} components, expected {dim}")
    zero = np.zeros(dim, dtype=complex)
    try:
        return np.array([c.value(zero) if isinstance(c, Const) else _fail() for c in comps])
    except _NotConstant:
        raise ParseError("points must be constant expressions") from None


class _NotConstant(Exception):
    pass


def _fail():
    raise _NotConstant
