"""Derivation of the equivalent PDE tensors of a linear scheme.

The scheme's one-step update is written in moment space as

    m(t + dt) = sum_p (-dt)^p / p!  (Lambda . grad)^p  (J m)(t),

with transport operators Lambda_alpha = M V_alpha M^(-1).  Postulating that
the relaxed moments are slaved to the conserved ones,

    Y = E W + sum_n dt^n  B_n : grad^n W,
    d_t W = - sum_n dt^(n-1)  A_n : grad^n W,

and identifying powers of dt order by order determines A_n from the conserved
rows and B_n from the relaxed rows (inverting the diagonal relaxation).  Time
derivatives are always eliminated in favour of spatial ones before collecting,
so the resulting system contains spatial derivatives only.  Tensors are stored
dt-free on symmetric multi-indices; the order-n term enters the PDE with the
explicit weight dt^(n-1).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .scheme import SchemeSpec, build_collision
from .symkernel import Context, RatFun, RatMatrix, mat_mul, substitute

MAX_ORDER = 4


def gamma_count(d: int, n: int) -> int:
    """Independent symmetric multi-indices of order n in d dimensions."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    return math.factorial(d + n - 1) // (math.factorial(n) * math.factorial(d - 1))


def multi_indices(d: int, n: int) -> list[tuple[int, ...]]:
    """All exponent tuples (e_1..e_d) with sum n, in a fixed canonical order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d), n):
        exps = [0] * d
        for c in combo:
            exps[c] += 1
        out.append(tuple(exps))
    return sorted(set(out), reverse=True)


def multinomial(exps: tuple[int, ...]) -> int:
    n = sum(exps)
    out = math.factorial(n)
    for e in exps:
        out //= math.factorial(e)
    return out


@dataclass
class TransportOperators:
    """Moment-space advection matrices, one q x q matrix per direction."""

    matrices: tuple[RatMatrix, ...]

    @property
    def d(self) -> int:
        return len(self.matrices)


def transport_matrices(spec: SchemeSpec) -> TransportOperators:
    """Lambda_alpha = M Diag(v_j[alpha]) M^(-1), exactly."""
    ctx = spec.ctx
    lam = ctx.ratfun(ctx.poly("lam"))
    out = []
    for alpha in range(spec.d):
        diag = RatMatrix.zero(ctx, spec.q, spec.q).entries
        for j, v in enumerate(spec.velocities.velocities):
            diag[j][j] = ctx.ratfun(v[alpha]) * lam
        out.append(mat_mul(mat_mul(spec.M, RatMatrix(ctx, diag)), spec.M_inv))
    return TransportOperators(tuple(out))


class TensorA:
    """Order-n equivalent-equation tensor stored on symmetric multi-indices.

    Key (i, j, exps): row moment i, column moment j, exps a d-tuple of
    direction exponents summing to n.  For the conserved-block tensors
    rows = cols = N; the slaving corrections are (q-N) x N.  Zero entries are
    not stored.
    """

    __slots__ = ("ctx", "order", "rows", "cols", "d", "entries")

    def __init__(self, ctx: Context, order: int, rows: int, cols: int, d: int,
                 entries: Mapping[tuple[int, int, tuple[int, ...]], RatFun] | None = None):
        self.ctx = ctx
        self.order = order
        self.rows = rows
        self.cols = cols
        self.d = d
        self.entries: dict[tuple[int, int, tuple[int, ...]], RatFun] = {}
        for key, val in (entries or {}).items():
            if val:
                self.entries[key] = val

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.order, self.rows, self.cols)

    def get(self, i: int, j: int, exps: tuple[int, ...]) -> RatFun:
        return self.entries.get((i, j, exps), self.ctx.zero())

    def storage_size(self) -> int:
        """Number of independent slots, stored or not."""
        return self.rows * self.cols * gamma_count(self.d, self.order)

    def _zipwith(self, other: "TensorA", op) -> "TensorA":
        if self.shape != other.shape or self.d != other.d:
            raise ValueError("tensor shape mismatch")
        out: dict = {}
        for key in set(self.entries) | set(other.entries):
            v = op(self.get(*key[:2], key[2]), other.get(*key[:2], key[2]))
            if v:
                out[key] = v
        return TensorA(self.ctx, self.order, self.rows, self.cols, self.d, out)

    def __sub__(self, other: "TensorA") -> "TensorA":
        return self._zipwith(other, lambda a, b: a - b)

    def __add__(self, other: "TensorA") -> "TensorA":
        return self._zipwith(other, lambda a, b: a + b)

    def map(self, fn: Callable[[RatFun], RatFun]) -> "TensorA":
        return TensorA(self.ctx, self.order, self.rows, self.cols, self.d,
                       {k: fn(v) for k, v in self.entries.items()})

    def substituted(self, bindings) -> "TensorA":
        return self.map(lambda v: substitute(v, bindings))

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        return (
            isinstance(other, TensorA)
            and self.shape == other.shape
            and self.d == other.d
            and self.entries == other.entries
        )

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        ent = {}
        for (i, j, exps), v in sorted(self.entries.items()):
            ent[f"{i},{j},{':'.join(map(str, exps))}"] = v.text()
        return {"order": self.order, "rows": self.rows, "cols": self.cols,
                "d": self.d, "entries": ent}


def tensor_contract(A: TensorA, k: Sequence[RatFun], j: int) -> list[RatFun]:
    """Full contraction of the spatial slots with the vector k, column j.

    Returns, for each conserved row i, sum over all index tuples of
    A[i][j][alpha_1..alpha_n] k_alpha1 ... k_alphan; symmetric storage makes
    each stored entry count with its multinomial multiplicity.
    """
    if len(k) != A.d:
        raise ValueError("direction vector has wrong dimension")
    ctx = A.ctx
    out = [ctx.zero() for _ in range(A.rows)]
    for (i, jj, exps), v in A.entries.items():
        if jj != j:
            continue
        term = v * ctx.ratfun(multinomial(exps))
        for comp, e in zip(k, exps):
            for _ in range(e):
                term = term * comp
        out[i] = out[i] + term
    return out


class _OpSeries:
    """Homogeneous differential-operator matrix: multi-index -> RatMatrix."""

    __slots__ = ("ctx", "rows", "cols", "data")

    def __init__(self, ctx: Context, rows: int, cols: int,
                 data: Mapping[tuple[int, ...], RatMatrix] | None = None):
        self.ctx = ctx
        self.rows = rows
        self.cols = cols
        self.data = dict(data or {})

    def __add__(self, other: "_OpSeries") -> "_OpSeries":
        out = dict(self.data)
        for e, m in other.data.items():
            out[e] = out[e] + m if e in out else m
        return _OpSeries(self.ctx, self.rows, self.cols, out)

    def __matmul__(self, other: "_OpSeries") -> "_OpSeries":
        out: dict = {}
        for e1, m1 in self.data.items():
            for e2, m2 in other.data.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                p = mat_mul(m1, m2)
                out[e] = out[e] + p if e in out else p
        return _OpSeries(self.ctx, self.rows, other.cols, out)

    def scale(self, f: Fraction) -> "_OpSeries":
        rf = self.ctx.ratfun(f)
        return _OpSeries(self.ctx, self.rows, self.cols,
                         {e: m.scale(rf) for e, m in self.data.items()})

    def neg(self) -> "_OpSeries":
        return self.scale(Fraction(-1))

    def top(self, n: int) -> "_OpSeries":
        return _OpSeries(self.ctx, n, self.cols,
                         {e: m.block(0, n, 0, self.cols) for e, m in self.data.items()})

    def bottom(self, n: int) -> "_OpSeries":
        return _OpSeries(self.ctx, self.rows - n, self.cols,
                         {e: m.block(n, self.rows, 0, self.cols) for e, m in self.data.items()})

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.data.values())


@dataclass
class ExpansionResult:
    """Tensors of the equivalent system plus the slaving corrections.

    A[n] for 1 <= n <= order; B[n] for 1 <= n <= order-1 gives the relaxed
    moments as Y = E W + sum dt^n B_n : grad^n W.  The private series retain
    enough state to re-check the defining substitution property.
    """

    spec: SchemeSpec
    order: int
    A: dict[int, TensorA]
    B: dict[int, "TensorA"]
    _X: list[_OpSeries]
    _P: list[_OpSeries]
    _T: list[_OpSeries]

    def defining_residual_is_zero(self) -> bool:
        """Substitute both series back into the scheme's expanded form.

        True when every collected power of dt through the derivation order
        vanishes identically, i.e. the returned tensors solve the order-by-
        order identification exactly.  At the top order only the conserved
        rows are constrained (the slaving correction there is not part of the
        result).
        """
        N = self.spec.N
        for k in range(0, self.order + 1):
            acc: _OpSeries | None = None
            for a in range(0, k + 1):
                if a < len(self._P) and k - a < len(self._T):
                    term = self._P[a] @ self._T[k - a]
                    acc = term if acc is None else acc + term
            for a in range(0, k + 1):
                if a < len(self._X) and k - a < len(self._P):
                    term = (self._X[a] @ self._P[k - a]).neg()
                    acc = term if acc is None else acc + term
            if acc is None:
                continue
            full_rows_known = k < self.order or len(self._P) > self.order
            check = acc if full_rows_known else acc.top(N)
            if not check.is_zero():
                return False
        return True


def _operator_to_tensor(ctx: Context, op: _OpSeries, order: int, rows: int,
                        cols: int, d: int, negate: bool) -> TensorA:
    entries: dict = {}
    for exps, mat in op.data.items():
        if sum(exps) != order:
            raise AssertionError("inhomogeneous operator at fixed dt order")
        w = Fraction(-1 if negate else 1, multinomial(exps))
        wrf = ctx.ratfun(w)
        for i in range(mat.rows):
            for j in range(mat.cols):
                v = mat.entries[i][j]
                if v:
                    entries[(i, j, exps)] = wrf * v
    return TensorA(ctx, order, rows, cols, d, entries)


def derive_equivalent_equations(spec: SchemeSpec, M_order: int) -> ExpansionResult:
    """Order-by-order identification up to dt^M_order.

    The conserved rows of every collected power determine A_n; the relaxed
    rows determine B_n after inverting the diagonal relaxation (each rate
    s_k = 1/(sigma_k + 1/2) is structurally nonzero).
    """
    if not (1 <= M_order <= MAX_ORDER):
        raise ValueError(f"order must lie in 1..{MAX_ORDER}")
    ctx = spec.ctx
    q, N, d = spec.q, spec.N, spec.d
    J = build_collision(spec).J
    lams = transport_matrices(spec)

    unit = lambda a: tuple(1 if i == a else 0 for i in range(d))
    L = _OpSeries(ctx, q, q, {unit(a): lams.matrices[a] for a in range(d)})
    X = [_OpSeries(ctx, q, q, {(0,) * d: J})]
    Lp = _OpSeries(ctx, q, q, {(0,) * d: RatMatrix.identity(ctx, q)})
    for p in range(1, M_order + 1):
        Lp = L @ Lp
        X.append((Lp @ X[0]).scale(Fraction((-1) ** p, math.factorial(p))))

    eye_n = RatMatrix.identity(ctx, N)
    # P[0] = [I; E] maps conserved moments to the full moment vector
    p0 = RatMatrix(ctx, eye_n.entries + [row[:] for row in spec.E.entries]) \
        if q > N else eye_n
    P = [_OpSeries(ctx, q, N, {(0,) * d: p0})]
    T = [_OpSeries(ctx, N, N, {(0,) * d: eye_n})]
    D: list[_OpSeries | None] = [None]

    s_inverse = [(sig + ctx.ratfun(Fraction(1, 2))) for sig in spec.sigma]

    def compositions(parts: int, total: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(1, total - parts + 2):
            for rest in compositions(parts - 1, total - first):
                yield (first,) + rest

    A_out: dict[int, TensorA] = {}
    B_out: dict[int, TensorA] = {}
    for k in range(1, M_order + 1):
        Gk: _OpSeries | None = None
        for a in range(1, k + 1):
            term = X[a] @ P[k - a]
            Gk = term if Gk is None else Gk + term
        # products of at least two lower-order generators
        Tknown: _OpSeries | None = None
        for r in range(2, k + 1):
            for comp in compositions(r, k):
                acc: _OpSeries | None = None
                for idx in comp:
                    acc = D[idx] if acc is None else acc @ D[idx]
                acc = acc.scale(Fraction(1, math.factorial(r)))
                Tknown = acc if Tknown is None else Tknown + acc
        Dk = Gk.top(N) if Tknown is None else Gk.top(N) + Tknown.neg()
        D.append(Dk)
        Tk = Dk if Tknown is None else Tknown + Dk
        T.append(Tk)
        A_out[k] = _operator_to_tensor(ctx, Dk, k, N, N, d, negate=True)
        if k < M_order and q > N:
            E_op = _OpSeries(ctx, q - N, N, {(0,) * d: spec.E})
            rhs = Gk.bottom(N) + (E_op @ Tk).neg()
            for a in range(1, k):
                rhs = rhs + (P[a].bottom(N) @ T[k - a]).neg()
            b_data = {}
            for e, m in rhs.data.items():
                rows = [[s_inverse[r] * m.entries[r][c] for c in range(N)]
                        for r in range(q - N)]
                b_data[e] = RatMatrix(ctx, rows)
            Bk = _OpSeries(ctx, q - N, N, b_data)
            B_out[k] = _operator_to_tensor(ctx, Bk, k, q - N, N, d, negate=False)
            pk_data = {e: RatMatrix(ctx, [[ctx.zero()] * N for _ in range(N)] + m.entries)
                       for e, m in b_data.items()}
            P.append(_OpSeries(ctx, q, N, pk_data))
        elif k < M_order:
            P.append(_OpSeries(ctx, q, N, {}))

    return ExpansionResult(spec, M_order, A_out, B_out, X, P, T)


# -- emitters -------------------------------------------------------------------


def tensors_to_json(result: ExpansionResult, include_b: bool = False) -> dict:
    doc = {
        "scheme": result.spec.name,
        "order": result.order,
        "A": {str(n): t.to_json() for n, t in result.A.items()},
    }
    if include_b:
        doc["B"] = {str(n): t.to_json() for n, t in result.B.items()}
    return doc


_LATEX_NAMES = {
    "rho": r"\rho", "qx": "q_x", "qy": "q_y", "eps": r"\varepsilon",
    "eps2": r"\varepsilon_2", "phix": r"\varphi_x", "phiy": r"\varphi_y",
    "xx": "p_{xx}", "xy": "p_{xy}",
}

_AXES = ("x", "y", "z")


def _latex_ratfun(v: RatFun) -> str:
    txt = v.text().replace("*", r" \, ").replace("lam", r"\lambda")
    for k, tex in _LATEX_NAMES.items():
        txt = txt.replace(f"E_{k}_", f"E^{{{tex}}}_")
        txt = txt.replace(f"sigma_{k}", rf"\sigma_{{{tex}}}")
    return txt


def equations_to_latex(result: ExpansionResult) -> str:
    """One display equation per conserved moment, all orders collected."""
    spec = result.spec
    names = [(_LATEX_NAMES.get(n, n)) for n in spec.basis.names[: spec.N]]
    lines = []
    for i in range(spec.N):
        terms = [rf"\partial_t {names[i]}"]
        for n in range(1, result.order + 1):
            prefix = "" if n == 1 else rf"\Delta t^{{{n - 1}}} \,"
            for (ii, j, exps), v in sorted(result.A[n].entries.items()):
                if ii != i:
                    continue
                deriv = "".join(
                    rf"\partial_{{{_AXES[a]}}}" + (f"^{{{e}}}" if e > 1 else "")
                    for a, e in enumerate(exps) if e
                )
                mult = multinomial(exps)
                coeff = _latex_ratfun(v if mult == 1 else v * v.ctx.ratfun(mult))
                terms.append(rf"{prefix}\left({coeff}\right) {deriv} {names[j]}")
        lines.append(" + ".join(terms) + " = 0")
    return "\\\\\n".join(lines) + "\n"
