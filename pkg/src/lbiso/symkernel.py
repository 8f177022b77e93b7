"""Exact symbolic kernel: multivariate polynomials and rational functions over Q.

Everything downstream (scheme matrices, equivalent-equation tensors, isotropy
residuals) is computed in this arithmetic.  Coefficients are exact rationals,
monomials are ordered graded-lexicographically, and rational functions are kept
in a canonical form (gcd-cancelled, monic denominator) so that equality is
structural and a vanishing residual is an exact zero, never a small float.

The heavy lifting (sparse polynomial arithmetic, gcd) is delegated to sympy's
polynomial rings.  Denominators produced by the lattice Boltzmann machinery are
always products of registered linear factors such as (sigma_k + 1/2) times a
monomial, so normalization uses fast trial division against the registry and
only falls back to a generic multivariate gcd for exotic inputs.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from sympy.polys.domains import QQ
from sympy.polys.rings import PolyRing


class SymbolKind(enum.Enum):
    PARAMETER = "parameter"  # equilibrium entries, relaxation sigmas
    SCALE = "scale"          # lattice velocity scale, time step
    TRIG = "trig"            # cosine/sine of the symbolic rotation


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: SymbolKind

    def __post_init__(self):
        if not self.name.isidentifier():
            raise ValueError(f"symbol name {self.name!r} is not an identifier")


def _to_qq(x) -> "QQ":
    if isinstance(x, Fraction):
        return QQ(x.numerator, x.denominator)
    if isinstance(x, int):
        return QQ(x)
    return QQ(x.numerator, x.denominator)


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


class Context:
    """Immutable symbol table owning the polynomial ring of a derivation.

    Built once per scheme; all Poly/RatFun values carry a reference to their
    context and cannot be mixed across contexts.
    """

    def __init__(self, symbols: Sequence[Symbol]):
        names = [s.name for s in symbols]
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names in context")
        self.symbols = tuple(symbols)
        self.index = {s.name: i for i, s in enumerate(self.symbols)}
        self.ring = PolyRing(",".join(names), QQ, order="grlex")
        self.ngens = len(names)
        self._zero_exp = (0,) * self.ngens
        # registry of linear denominator factors: gen index -> root, meaning
        # the factor (x_v - root); populated by the scheme layer
        self._den_factors: list[tuple[int, object]] = []

    # -- construction helpers -------------------------------------------------

    def symbol(self, name: str) -> Symbol:
        return self.symbols[self.index[name]]

    def gen(self, name: str):
        return self.ring.gens[self.index[name]]

    def poly(self, value) -> "Poly":
        if isinstance(value, Poly):
            if value.ctx is not self:
                raise ValueError("context mismatch")
            return value
        if isinstance(value, (int, Fraction)):
            q = _to_qq(value)
            if not q:
                return Poly(self, self.ring.zero)
            return Poly(self, self.ring.from_dict({self._zero_exp: q}))
        if isinstance(value, Symbol):
            return Poly(self, self.gen(value.name))
        if isinstance(value, str):
            return Poly(self, self.gen(value))
        raise TypeError(f"cannot build Poly from {type(value)}")

    def ratfun(self, num, den=1) -> "RatFun":
        if isinstance(num, RatFun) or isinstance(den, RatFun):
            n = num if isinstance(num, RatFun) else RatFun._make(self, self.poly(num).p, self.ring.one)
            d = den if isinstance(den, RatFun) else RatFun._make(self, self.poly(den).p, self.ring.one)
            return n / d
        return RatFun._make(self, self.poly(num).p, self.poly(den).p)

    def zero(self) -> "RatFun":
        return RatFun(self, self.ring.zero, self.ring.one, _normalized=True)

    def one(self) -> "RatFun":
        return self.ratfun(1)

    def register_denominator_factor(self, name: str, root: Fraction) -> None:
        """Declare that (name - root) may appear as a denominator factor.

        Registered factors are cancelled by fast synthetic division instead of
        a generic multivariate gcd.
        """
        key = (self.index[name], _to_qq(root))
        if key not in self._den_factors:
            self._den_factors.append(key)

    # -- low level polynomial helpers (operate on PolyElement) ----------------

    def _eval_linear(self, p, v: int, root):
        """p with generator v replaced by the constant root."""
        out: dict = {}
        for mono, coeff in p.items():
            m = mono[v]
            key = mono[:v] + (0,) + mono[v + 1:]
            val = coeff * root**m if m else coeff
            acc = out.get(key)
            out[key] = val + acc if acc is not None else val
        return self.ring.from_dict(out)

    def _div_linear(self, p, v: int, root):
        """Exact quotient p / (x_v - root).  Caller guarantees divisibility."""
        slices: dict[int, dict] = {}
        for mono, coeff in p.items():
            m = mono[v]
            key = mono[:v] + (0,) + mono[v + 1:]
            slices.setdefault(m, {})[key] = coeff
        deg = max(slices)
        quot: dict = {}
        carry = slices.get(deg, {})
        for m in range(deg - 1, -1, -1):
            for key, cf in carry.items():
                quot[key[:v] + (m,) + key[v + 1:]] = cf
            nxt = dict(slices.get(m, {}))
            for key, cf in carry.items():
                val = cf * root
                acc = nxt.get(key)
                nxt[key] = val + acc if acc is not None else val
            carry = {k: c for k, c in nxt.items() if c}
        if carry:
            raise ArithmeticError("polynomial not divisible by linear factor")
        return self.ring.from_dict(quot)

    def _mono_content(self, p) -> tuple:
        it = iter(p.keys())
        mins = list(next(it))
        for mono in it:
            for i in range(self.ngens):
                if mono[i] < mins[i]:
                    mins[i] = mono[i]
        return tuple(mins)

    def _strip_mono(self, p, mins: tuple):
        if not any(mins):
            return p
        return self.ring.from_dict(
            {tuple(m[i] - mins[i] for i in range(self.ngens)): c for m, c in p.items()}
        )

    def _normalize_fraction(self, n, d):
        """Canonical (num, den): gcd(num, den) = 1, den monic under grlex."""
        ring = self.ring
        if not n:
            return ring.zero, ring.one
        if not d:
            raise ZeroDivisionError("zero denominator")
        if len(d) == 1:
            (dm, dc), = d.items()
            nm = self._mono_content(n)
            shared = tuple(min(a, b) for a, b in zip(nm, dm))
            if any(shared):
                n = self._strip_mono(n, shared)
                dm = tuple(a - b for a, b in zip(dm, shared))
            if dc != 1:
                n = n.quo_ground(dc)
            return n, ring.from_dict({dm: QQ(1)})
        dmon = self._mono_content(d)
        core = self._strip_mono(d, dmon)
        factors: list[tuple[int, object]] = []
        for v, root in self._den_factors:
            while len(core) > 1 and not self._eval_linear(core, v, root):
                core = self._div_linear(core, v, root)
                factors.append((v, root))
            if len(core) == 1:
                break
        if len(core) > 1:
            # a substitution may introduce a fresh univariate linear factor;
            # remember it so later cancellations take the fast path
            lin = self._univariate_linear(core)
            if lin is not None:
                v, root = lin
                if (v, root) not in self._den_factors:
                    self._den_factors.append((v, root))
                core = self._div_linear(core, v, root)
                factors.append((v, root))
                while len(core) > 1 and not self._eval_linear(core, v, root):
                    core = self._div_linear(core, v, root)
                    factors.append((v, root))
        if len(core) == 1:
            (cm, cc), = core.items()
            dmon = tuple(a + b for a, b in zip(dmon, cm))
            kept: list[tuple[int, object]] = []
            for v, root in factors:
                if not self._eval_linear(n, v, root):
                    n = self._div_linear(n, v, root)
                else:
                    kept.append((v, root))
            nm = self._mono_content(n)
            shared = tuple(min(a, b) for a, b in zip(nm, dmon))
            if any(shared):
                n = self._strip_mono(n, shared)
                dmon = tuple(a - b for a, b in zip(dmon, shared))
            d = ring.from_dict({dmon: QQ(1)})
            for v, root in kept:
                lin = ring.from_dict(
                    {tuple(1 if i == v else 0 for i in range(self.ngens)): QQ(1),
                     self._zero_exp: -root}
                )
                d = d * lin
            if cc != 1:
                n = n.quo_ground(cc)
        else:
            n, d = n.cancel(d)
        lc = d.LC
        if lc != 1:
            n = n.quo_ground(lc)
            d = d.quo_ground(lc)
        return n, d

    def _univariate_linear(self, p):
        """(v, root) if p = a*x_v + b with a != 0, else None."""
        vs = set()
        for mono in p.keys():
            for i, e in enumerate(mono):
                if e:
                    vs.add(i)
                    if e > 1 or len(vs) > 1:
                        return None
        if len(vs) != 1:
            return None
        v = vs.pop()
        a = b = QQ(0)
        for mono, coeff in p.items():
            if mono[v] == 1:
                a = coeff
            else:
                b = coeff
        return v, -b / a


class Poly:
    """Exact multivariate polynomial attached to a Context."""

    __slots__ = ("ctx", "p")

    def __init__(self, ctx: Context, p):
        self.ctx = ctx
        self.p = p

    # -- views -----------------------------------------------------------------

    @property
    def terms(self) -> dict:
        """Map multi-degree tuple -> Fraction coefficient, zero-free."""
        return {mono: _to_fraction(c) for mono, c in self.p.terms()}

    def is_zero(self) -> bool:
        return not self.p

    def degree_in(self, name: str) -> int:
        v = self.ctx.index[name]
        return max((mono[v] for mono in self.p.keys()), default=0)

    def total_degree(self) -> int:
        return max((sum(mono) for mono in self.p.keys()), default=0)

    # -- arithmetic --------------------------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.ctx is not self.ctx:
                raise ValueError("context mismatch")
            return other
        return self.ctx.poly(other)

    def __add__(self, other):
        return Poly(self.ctx, self.p + self._coerce(other).p)

    def __sub__(self, other):
        return Poly(self.ctx, self.p - self._coerce(other).p)

    def __mul__(self, other):
        return Poly(self.ctx, self.p * self._coerce(other).p)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Poly(self.ctx, -self.p)

    def __pow__(self, n: int):
        return Poly(self.ctx, self.p**n)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.poly(other)
        return isinstance(other, Poly) and self.p == other.p

    def __hash__(self):
        return hash((id(self.ctx), tuple(sorted(self.p.terms()))))

    def __bool__(self):
        return bool(self.p)

    # -- serialization -----------------------------------------------------------

    def text(self) -> str:
        """Canonical text: monomials in descending grlex order, explicit rationals."""
        if not self.p:
            return "0"
        names = [s.name for s in self.ctx.symbols]
        pieces = []
        for mono, coeff in self.p.terms():  # terms() iterates in ring order
            c = _to_fraction(coeff)
            vars_ = [names[i] if e == 1 else f"{names[i]}^{e}"
                     for i, e in enumerate(mono) if e]
            if not vars_:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(vars_)
            else:
                body = "*".join([str(abs(c))] + vars_)
            pieces.append(("-" if c < 0 else "+") + body)
        out = "".join(pieces)
        return out[1:] if out.startswith("+") else out

    def __repr__(self):
        return f"Poly({self.p})"


class RatFun:
    """Rational function num/den in canonical form.

    Invariants: gcd(num, den) = 1, den monic under grlex, den of zero is 1.
    Equality of canonical forms is structural.
    """

    __slots__ = ("ctx", "num", "den")

    def __init__(self, ctx: Context, num, den, _normalized: bool = False):
        if not _normalized:
            num, den = ctx._normalize_fraction(num, den)
        self.ctx = ctx
        self.num = num
        self.den = den

    @classmethod
    def _make(cls, ctx: Context, num, den):
        return cls(ctx, num, den)

    # -- predicates ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def is_one(self) -> bool:
        return self.num == self.ctx.ring.one and self.den == self.ctx.ring.one

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.ratfun(other)
        return (
            isinstance(other, RatFun)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        return hash((id(self.ctx), tuple(sorted(self.num.terms())),
                     tuple(sorted(self.den.terms()))))

    # -- arithmetic -----------------------------------------------------------------

    def _coerce(self, other) -> "RatFun":
        if isinstance(other, RatFun):
            if other.ctx is not self.ctx:
                raise ValueError("context mismatch")
            return other
        if isinstance(other, Poly):
            return RatFun(self.ctx, other.p, self.ctx.ring.one, _normalized=True)
        return self.ctx.ratfun(other)

    def __add__(self, other):
        o = self._coerce(other)
        if self.den == o.den:
            return RatFun(self.ctx, self.num + o.num, self.den)
        return RatFun(self.ctx, self.num * o.den + o.num * self.den, self.den * o.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if self.den == o.den:
            return RatFun(self.ctx, self.num - o.num, self.den)
        return RatFun(self.ctx, self.num * o.den - o.num * self.den, self.den * o.den)

    def __mul__(self, other):
        o = self._coerce(other)
        if not self.num or not o.num:
            return self.ctx.zero()
        return RatFun(self.ctx, self.num * o.num, self.den * o.den)

    def __truediv__(self, other):
        o = self._coerce(other)
        if not o.num:
            raise ZeroDivisionError("division by zero rational function")
        return RatFun(self.ctx, self.num * o.den, self.den * o.num)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return RatFun(self.ctx, -self.num, self.den, _normalized=True)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return RatFun(self.ctx, self.num**n, self.den**n)

    def inverse(self) -> "RatFun":
        if not self.num:
            raise ZeroDivisionError("inverse of zero")
        return RatFun(self.ctx, self.den, self.num)

    # -- views --------------------------------------------------------------------

    @property
    def num_poly(self) -> Poly:
        return Poly(self.ctx, self.num)

    @property
    def den_poly(self) -> Poly:
        return Poly(self.ctx, self.den)

    def is_polynomial(self) -> bool:
        return self.den == self.ctx.ring.one

    def text(self) -> str:
        if self.den == self.ctx.ring.one:
            return Poly(self.ctx, self.num).text()
        return f"({Poly(self.ctx, self.num).text()})/({Poly(self.ctx, self.den).text()})"

    def __repr__(self):
        return f"RatFun({self.num} / {self.den})"


# -- module operations ----------------------------------------------------------


def arith(a: RatFun, b: RatFun, op: str) -> RatFun:
    """Exact field arithmetic; op in {'add', 'sub', 'mul', 'div'}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def substitute(f: RatFun, bindings: Mapping[str, RatFun | Poly | int | Fraction]) -> RatFun:
    """Simultaneous substitution of symbols by rational functions.

    Unbound symbols pass through.  Raises ZeroDivisionError if the substituted
    denominator vanishes identically (an invalid parameter assignment).
    """
    ctx = f.ctx
    rf_bindings: dict[int, RatFun] = {}
    for name, val in bindings.items():
        rf_bindings[ctx.index[name]] = val if isinstance(val, RatFun) else ctx.ratfun(val)
    num = _substitute_poly(ctx, f.num, rf_bindings)
    den = _substitute_poly(ctx, f.den, rf_bindings)
    if not den.num:
        raise ZeroDivisionError("substitution makes denominator identically zero")
    return num / den


def _substitute_poly(ctx: Context, p, rf_bindings: Mapping[int, RatFun]) -> RatFun:
    ring = ctx.ring
    if not p:
        return ctx.zero()
    touched = [v for v in rf_bindings if any(mono[v] for mono in p.keys())]
    if not touched:
        return RatFun(ctx, p, ring.one, _normalized=True)
    # common denominator: product of binding denominators to their max degree
    max_deg = {v: max(mono[v] for mono in p.keys()) for v in touched}
    num_pows = {v: _powers(rf_bindings[v].num, max_deg[v]) for v in touched}
    den_pows = {v: _powers(rf_bindings[v].den, max_deg[v]) for v in touched}
    total_den = ring.one
    for v in touched:
        total_den = total_den * den_pows[v][max_deg[v]]
    acc = ring.zero
    for mono, coeff in p.items():
        term = ring.from_dict(
            {tuple(0 if i in rf_bindings else e for i, e in enumerate(mono)): coeff}
        )
        for v in touched:
            e = mono[v]
            term = term * num_pows[v][e] * den_pows[v][max_deg[v] - e]
        acc = acc + term
    return RatFun(ctx, acc, total_den)


def _powers(p, n: int) -> list:
    out = [p.ring.one]
    for _ in range(n):
        out.append(out[-1] * p)
    return out


def pyth_reduce(p: Poly, cos_name: str = "c", sin_name: str = "s") -> Poly:
    """Normal form modulo (c^2 + s^2 - 1) with sine degree at most one.

    The result vanishes exactly when p vanishes on the whole unit circle,
    which is how the universal quantifier over plane rotations is discharged.
    """
    ctx = p.ctx
    ring = ctx.ring
    iv_c = ctx.index[cos_name]
    iv_s = ctx.index[sin_name]
    one_minus_c2 = ring.from_dict(
        {ctx._zero_exp: QQ(1),
         tuple(2 if i == iv_c else 0 for i in range(ctx.ngens)): QQ(-1)}
    )
    pows = [ring.one]

    def om_pow(m: int):
        while len(pows) <= m:
            pows.append(pows[-1] * one_minus_c2)
        return pows[m]

    acc = ring.zero
    for mono, coeff in p.p.items():
        es = mono[iv_s]
        m, r = divmod(es, 2)
        base = ring.from_dict({mono[:iv_s] + (r,) + mono[iv_s + 1:]: coeff})
        acc = acc + (base * om_pow(m) if m else base)
    return Poly(ctx, acc)


def eval_rational(f: RatFun, point: Mapping[str, Fraction | int]) -> Fraction:
    """Exact value of f at a rational point binding every symbol of f."""
    num = _eval_poly(f.ctx, f.num, point)
    den = _eval_poly(f.ctx, f.den, point)
    if den == 0:
        raise ZeroDivisionError("pole at evaluation point")
    return num / den


def _eval_poly(ctx: Context, p, point: Mapping[str, Fraction | int]) -> Fraction:
    vals: dict[int, Fraction] = {}
    for name, v in point.items():
        vals[ctx.index[name]] = Fraction(v)
    total = Fraction(0)
    for mono, coeff in p.items():
        acc = _to_fraction(coeff)
        for i, e in enumerate(mono):
            if e:
                if i not in vals:
                    raise KeyError(f"unbound symbol {ctx.symbols[i].name}")
                acc *= vals[i] ** e
        total += acc
    return total


# -- exact matrices ---------------------------------------------------------------


class RatMatrix:
    """Dense matrix of RatFun entries with exact operations."""

    __slots__ = ("ctx", "rows", "cols", "entries")

    def __init__(self, ctx: Context, entries: Sequence[Sequence[RatFun]]):
        self.ctx = ctx
        self.entries = [list(row) for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        if any(len(row) != self.cols for row in self.entries):
            raise ValueError("ragged matrix")

    @classmethod
    def identity(cls, ctx: Context, n: int) -> "RatMatrix":
        one, zero = ctx.one(), ctx.zero()
        return cls(ctx, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, ctx: Context, rows: int, cols: int) -> "RatMatrix":
        z = ctx.zero()
        return cls(ctx, [[z] * cols for _ in range(rows)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return (
            isinstance(other, RatMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and all(
                self.entries[i][j] == other.entries[i][j]
                for i in range(self.rows)
                for j in range(self.cols)
            )
        )

    def __add__(self, other):
        return RatMatrix(self.ctx, [
            [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
            for i in range(self.rows)
        ])

    def __sub__(self, other):
        return RatMatrix(self.ctx, [
            [self.entries[i][j] - other.entries[i][j] for j in range(self.cols)]
            for i in range(self.rows)
        ])

    def scale(self, f: RatFun) -> "RatMatrix":
        return RatMatrix(self.ctx, [[f * x for x in row] for row in self.entries])

    def transpose(self) -> "RatMatrix":
        return RatMatrix(self.ctx, [list(col) for col in zip(*self.entries)])

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "RatMatrix":
        return RatMatrix(self.ctx, [row[c0:c1] for row in self.entries[r0:r1]])

    def map(self, fn) -> "RatMatrix":
        return RatMatrix(self.ctx, [[fn(x) for x in row] for row in self.entries])

    def is_zero(self) -> bool:
        return all(not x for row in self.entries for x in row)


def mat_mul(a: RatMatrix, b: RatMatrix) -> RatMatrix:
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch {a.rows}x{a.cols} * {b.rows}x{b.cols}")
    zero = a.ctx.zero()
    out = []
    for i in range(a.rows):
        arow = a.entries[i]
        orow = []
        for j in range(b.cols):
            acc = None
            for k in range(a.cols):
                x, y = arow[k], b.entries[k][j]
                if x.num and y.num:
                    t = x * y
                    acc = t if acc is None else acc + t
            orow.append(acc if acc is not None else zero)
        out.append(orow)
    return RatMatrix(a.ctx, out)


def mat_inverse(a: RatMatrix) -> RatMatrix:
    """Exact inverse via fraction-free (Bareiss) elimination.

    Denominators are cleared row by row, the polynomial part is triangularized
    with exact divisions by previous pivots (controls intermediate growth), and
    a rational back-substitution assembles the inverse.  Raises ValueError on a
    singular matrix.
    """
    if a.rows != a.cols:
        raise ValueError("inverse of non-square matrix")
    n = a.rows
    ctx = a.ctx
    ring = ctx.ring
    # clear denominators per row: A = diag(1/D_i) * P
    P: list[list] = []
    D: list = []
    for i in range(n):
        den = ring.one
        for x in a.entries[i]:
            g = den.gcd(x.den)
            den = den * x.den.quo(g)
        P.append([x.num * den.quo(x.den) for x in a.entries[i]])
        D.append(den)
    aug = [P[i] + [D[i] if i == j else ring.zero for j in range(n)] for i in range(n)]
    prev = ring.one
    sign = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ValueError("singular matrix")
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
            sign = -sign
        pivot = aug[col][col]
        for r in range(col + 1, n):
            factor = aug[r][col]
            for c in range(col, 2 * n):
                num = pivot * aug[r][c] - factor * aug[col][c]
                aug[r][c] = num.quo(prev) if prev != ring.one else num
        prev = pivot
    # back substitution in the fraction field
    inv_rows: list[list[RatFun]] = [[ctx.zero()] * n for _ in range(n)]
    for j in range(n):
        xs: list[RatFun] = [ctx.zero()] * n
        for i in range(n - 1, -1, -1):
            rhs = RatFun(ctx, aug[i][n + j], ring.one, _normalized=True)
            for k in range(i + 1, n):
                if aug[i][k] and xs[k].num:
                    rhs = rhs - RatFun(ctx, aug[i][k], ring.one, _normalized=True) * xs[k]
            xs[i] = rhs / RatFun(ctx, aug[i][i], ring.one, _normalized=True)
        for i in range(n):
            inv_rows[i][j] = xs[i]
    return RatMatrix(ctx, inv_rows)


def mat_det(a: RatMatrix) -> RatFun:
    """Exact determinant by the same fraction-free elimination."""
    if a.rows != a.cols:
        raise ValueError("determinant of non-square matrix")
    n = a.rows
    ctx = a.ctx
    ring = ctx.ring
    P: list[list] = []
    dens: list = []
    for i in range(n):
        den = ring.one
        for x in a.entries[i]:
            g = den.gcd(x.den)
            den = den * x.den.quo(g)
        P.append([x.num * den.quo(x.den) for x in a.entries[i]])
        dens.append(den)
    mat = [row[:] for row in P]
    prev = ring.one
    sign = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if mat[r][col]), None)
        if piv is None:
            return ctx.zero()
        if piv != col:
            mat[col], mat[piv] = mat[piv], mat[col]
            sign = -sign
        pivot = mat[col][col]
        for r in range(col + 1, n):
            factor = mat[r][col]
            for c in range(col, n):
                num = pivot * mat[r][c] - factor * mat[col][c]
                mat[r][c] = num.quo(prev) if prev != ring.one else num
        prev = pivot
    det = RatFun(ctx, mat[n - 1][n - 1], ring.one, _normalized=True)
    if sign < 0:
        det = -det
    for den in dens:
        det = det / RatFun(ctx, den, ring.one, _normalized=True)
    return det
