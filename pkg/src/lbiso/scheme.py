"""Linear DdQq scheme model: velocities, moment basis, equilibrium and relaxation.

A scheme is described by q lattice velocities (integer multiples of the
velocity scale), q moment polynomials whose evaluation matrix M is invertible,
a count N of conserved moments, a (q-N) x N equilibrium matrix E of symbolic
entries with fixed scale powers, and per-moment relaxation parameters sigma_k.
The relaxation rate is the derived rational s_k = 1/(sigma_k + 1/2), which
keeps every rate inside the stability interval (0, 2) for sigma_k > 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .symkernel import (
    Context,
    Poly,
    RatFun,
    RatMatrix,
    Symbol,
    SymbolKind,
    mat_inverse,
    mat_mul,
)

SCHEME_FORMAT_VERSION = 1

LAM = "lam"   # velocity scale
DT = "dt"     # time step, carried for completeness; tensors are kept dt-free
COS = "c"
SIN = "s"


@dataclass(frozen=True)
class VelocitySet:
    """q lattice velocities; component j is velocities[j][alpha] * lam."""

    d: int
    velocities: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(set(self.velocities)) != len(self.velocities):
            raise ValueError("duplicate velocities")
        if any(len(v) != self.d for v in self.velocities):
            raise ValueError("velocity dimension mismatch")

    @property
    def q(self) -> int:
        return len(self.velocities)


@dataclass(frozen=True)
class MomentPolynomial:
    """Sparse polynomial in the velocity components and the scale.

    Terms are (component_exponents, lam_exponent, coefficient).  Scale
    homogeneity (sum of exponents constant across terms) is required so each
    moment carries a single power of lam.
    """

    name: str
    terms: tuple[tuple[tuple[int, ...], int, Fraction], ...]

    def scale_degree(self) -> int:
        degs = {sum(exps) + lp for exps, lp, _ in self.terms}
        if len(degs) != 1:
            raise ValueError(f"moment {self.name} is not scale-homogeneous")
        return degs.pop()

    def evaluate(self, ctx: Context, velocity: tuple[int, ...]) -> Poly:
        """Value at a lattice velocity, as a polynomial in lam."""
        lam = ctx.poly(LAM)
        total = ctx.poly(0)
        for exps, lam_pow, coeff in self.terms:
            factor = Fraction(coeff)
            for comp, e in zip(velocity, exps):
                factor *= Fraction(comp) ** e
            if factor:
                total = total + ctx.poly(factor) * lam ** (sum(exps) + lam_pow)
        return total


@dataclass(frozen=True)
class MomentBasis:
    polynomials: tuple[MomentPolynomial, ...]
    conserved: int  # first `conserved` moments are unchanged by collision

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.polynomials)


class SchemeSpec:
    """A fully specified linear scheme over its own symbol context.

    E entries are parameter symbols times the scale power implied by the
    moment's homogeneity degrees; S is diagonal with s_k = 1/(sigma_k + 1/2).
    Equilibrium or relaxation entries may be overridden with arbitrary exact
    expressions (used to impose parameter conditions before deriving).
    """

    def __init__(
        self,
        name: str,
        velocities: VelocitySet,
        basis: MomentBasis,
        e_overrides: dict[str, RatFun] | None = None,
        sigma_overrides: dict[str, RatFun] | None = None,
    ):
        if basis.conserved < 1 or basis.conserved > velocities.q:
            raise ValueError("conserved moment count out of range")
        if len(basis.polynomials) != velocities.q:
            raise ValueError("moment count must equal velocity count")
        self.name = name
        self.velocities = velocities
        self.basis = basis
        self.d = velocities.d
        self.q = velocities.q
        self.N = basis.conserved

        w_names = basis.names[: self.N]
        y_names = basis.names[self.N:]
        self.conserved_names = w_names
        self.relaxed_names = y_names
        self.e_symbol_names = [
            f"E_{k}_{i}" for k in y_names for i in w_names
        ]
        self.sigma_symbol_names = [f"sigma_{k}" for k in y_names]

        symbols = [Symbol(LAM, SymbolKind.SCALE), Symbol(DT, SymbolKind.SCALE)]
        symbols += [Symbol(n, SymbolKind.PARAMETER) for n in self.e_symbol_names]
        symbols += [Symbol(n, SymbolKind.PARAMETER) for n in self.sigma_symbol_names]
        symbols += [Symbol(COS, SymbolKind.TRIG), Symbol(SIN, SymbolKind.TRIG)]
        self.ctx = Context(symbols)
        for n in self.sigma_symbol_names:
            self.ctx.register_denominator_factor(n, Fraction(-1, 2))

        # overrides may come from a structurally identical foreign context
        self._e_overrides = {k: _remap(self.ctx, v) for k, v in (e_overrides or {}).items()}
        self._sigma_overrides = {k: _remap(self.ctx, v) for k, v in (sigma_overrides or {}).items()}

        degs = [p.scale_degree() for p in basis.polynomials]
        self._scale_degrees = degs
        ctx = self.ctx
        lam = ctx.ratfun(ctx.poly(LAM))
        half = Fraction(1, 2)

        # E: (q-N) x N, entry = parameter * lam^(deg_y - deg_w)
        e_rows = []
        for ky, yn in enumerate(y_names):
            row = []
            for kw, wn in enumerate(w_names):
                power = degs[self.N + ky] - degs[kw]
                if power < 0:
                    raise ValueError("conserved moment scale exceeds relaxed one")
                base = self._e_overrides.get(f"E_{yn}_{wn}")
                if base is None:
                    base = ctx.ratfun(ctx.poly(f"E_{yn}_{wn}"))
                row.append(base * lam**power)
            e_rows.append(row)
        self.E = RatMatrix(ctx, e_rows) if y_names else RatMatrix(ctx, [])

        self.sigma: list[RatFun] = []
        self.s_rates: list[RatFun] = []
        for yn in y_names:
            sig = self._sigma_overrides.get(f"sigma_{yn}")
            if sig is None:
                sig = ctx.ratfun(ctx.poly(f"sigma_{yn}"))
            self.sigma.append(sig)
            self.s_rates.append((sig + ctx.ratfun(half)).inverse())

        self._moment_matrix: RatMatrix | None = None
        self._moment_matrix_inv: RatMatrix | None = None

    # -- derived matrices -------------------------------------------------------

    @property
    def M(self) -> RatMatrix:
        if self._moment_matrix is None:
            self._moment_matrix = build_moment_matrix(self.basis, self.velocities, self.ctx)
            self._moment_matrix_inv = mat_inverse(self._moment_matrix)
        return self._moment_matrix

    @property
    def M_inv(self) -> RatMatrix:
        self.M
        return self._moment_matrix_inv

    def with_bindings(
        self,
        e_values: dict[str, RatFun | Fraction | int] | None = None,
        sigma_values: dict[str, RatFun | Fraction | int] | None = None,
    ) -> "SchemeSpec":
        """Copy of the scheme with some parameters pinned to exact expressions.

        Values may reference other parameter symbols of the same context; they
        are re-expressed in the fresh copy's context.
        """
        ctx = self.ctx

        def as_rf(v):
            return v if isinstance(v, RatFun) else ctx.ratfun(v)

        e_over = dict(self._e_overrides)
        for k, v in (e_values or {}).items():
            if k not in self.e_symbol_names:
                raise KeyError(f"unknown equilibrium parameter {k}")
            e_over[k] = as_rf(v)
        s_over = dict(self._sigma_overrides)
        for k, v in (sigma_values or {}).items():
            if k not in self.sigma_symbol_names:
                raise KeyError(f"unknown relaxation parameter {k}")
            s_over[k] = as_rf(v)
        return SchemeSpec(self.name, self.velocities, self.basis, e_over, s_over)


def _remap(ctx: Context, rf: RatFun) -> RatFun:
    if rf.ctx is ctx:
        return rf
    num = ctx.ring.from_dict(dict(rf.num.items()))
    den = ctx.ring.from_dict(dict(rf.den.items()))
    return RatFun(ctx, num, den)


@dataclass
class CollisionMatrix:
    """q x q relaxation toward equilibrium: identity on conserved moments."""

    J: RatMatrix
    N: int

    def conserved_block_is_identity(self) -> bool:
        ctx = self.J.ctx
        eye = RatMatrix.identity(ctx, self.N)
        return self.J.block(0, self.N, 0, self.N) == eye and \
            self.J.block(0, self.N, self.N, self.J.cols).is_zero()


def build_moment_matrix(basis: MomentBasis, vels: VelocitySet, ctx: Context) -> RatMatrix:
    """M[k][j] = k-th moment polynomial evaluated on velocity j."""
    if len(basis.polynomials) != vels.q:
        raise ValueError("moment/velocity count mismatch")
    rows = []
    for p in basis.polynomials:
        rows.append([
            RatFun(ctx, p.evaluate(ctx, v).p, ctx.ring.one, _normalized=True)
            for v in vels.velocities
        ])
    m = RatMatrix(ctx, rows)
    mat_inverse(m)  # raises ValueError if the basis is singular
    return m


def build_collision(spec: SchemeSpec) -> CollisionMatrix:
    """Block matrix [[I, 0], [S E, I - S]] acting on (conserved, relaxed)."""
    ctx = spec.ctx
    q, N = spec.q, spec.N
    J = RatMatrix.zero(ctx, q, q).entries
    one = ctx.one()
    for i in range(N):
        J[i][i] = one
    for r in range(q - N):
        s = spec.s_rates[r]
        for c in range(N):
            J[N + r][c] = s * spec.E.entries[r][c]
        J[N + r][N + r] = one - s
    return CollisionMatrix(RatMatrix(ctx, J), N)


def sigma_of_s(s: Fraction) -> Fraction:
    """Henon parameter of a relaxation rate; requires 0 < s < 2."""
    s = Fraction(s)
    if not (0 < s < 2):
        raise ValueError(f"relaxation rate {s} outside the stability interval (0, 2)")
    return 1 / s - Fraction(1, 2)


def s_of_sigma(sigma: RatFun | Fraction) -> RatFun | Fraction:
    """Relaxation rate 1/(sigma + 1/2); exact, symbolic or numeric."""
    if isinstance(sigma, RatFun):
        return (sigma + sigma.ctx.ratfun(Fraction(1, 2))).inverse()
    sigma = Fraction(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 1 / (sigma + Fraction(1, 2))


# -- D2Q9 preset ---------------------------------------------------------------


def _d2q9_moments() -> tuple[MomentPolynomial, ...]:
    F = Fraction

    def mp(name, terms):
        return MomentPolynomial(
            name, tuple((tuple(e), lp, F(c)) for e, lp, c in terms)
        )

    return (
        mp("rho", [((0, 0), 0, 1)]),
        mp("qx", [((1, 0), 0, 1)]),
        mp("qy", [((0, 1), 0, 1)]),
        mp("eps", [((2, 0), 0, 3), ((0, 2), 0, 3), ((0, 0), 2, -4)]),
        mp("eps2", [((4, 0), 0, F(9, 2)), ((2, 2), 0, 9), ((0, 4), 0, F(9, 2)),
                    ((2, 0), 2, F(-21, 2)), ((0, 2), 2, F(-21, 2)), ((0, 0), 4, 4)]),
        mp("phix", [((3, 0), 0, 3), ((1, 2), 0, 3), ((1, 0), 2, -5)]),
        mp("phiy", [((2, 1), 0, 3), ((0, 3), 0, 3), ((0, 1), 2, -5)]),
        mp("xx", [((2, 0), 0, 1), ((0, 2), 0, -1)]),
        mp("xy", [((1, 1), 0, 1)]),
    )


D2Q9_VELOCITIES = (
    (0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1),
)


def d2q9_preset() -> SchemeSpec:
    """Nine-velocity plane scheme with density and momentum conserved.

    Relaxed moments, in order: energy, energy square, the two heat-flux
    components, and the two deviatoric stress components.  The moment rows are
    mutually orthogonal over the velocity set, which fixes the scale powers of
    the 18 equilibrium parameters and the 6 relaxation parameters.
    """
    vels = VelocitySet(2, D2Q9_VELOCITIES)
    basis = MomentBasis(_d2q9_moments(), conserved=3)
    return SchemeSpec("d2q9", vels, basis)


# -- declarative JSON form ----------------------------------------------------


def scheme_to_json(spec: SchemeSpec) -> dict:
    return {
        "format": SCHEME_FORMAT_VERSION,
        "name": spec.name,
        "d": spec.d,
        "conserved": spec.N,
        "velocities": [list(v) for v in spec.velocities.velocities],
        "moments": [
            {
                "name": p.name,
                "terms": [
                    {"exponents": list(exps), "lam_power": lp, "coeff": str(c)}
                    for exps, lp, c in p.terms
                ],
            }
            for p in spec.basis.polynomials
        ],
    }


def scheme_from_json(doc: dict) -> SchemeSpec:
    if doc.get("format") != SCHEME_FORMAT_VERSION:
        raise ValueError(f"unsupported scheme format {doc.get('format')!r}")
    d = int(doc["d"])
    vels = VelocitySet(d, tuple(tuple(int(x) for x in v) for v in doc["velocities"]))
    moments = tuple(
        MomentPolynomial(
            m["name"],
            tuple(
                (tuple(int(x) for x in t["exponents"]), int(t["lam_power"]),
                 Fraction(t["coeff"]))
                for t in m["terms"]
            ),
        )
        for m in doc["moments"]
    )
    basis = MomentBasis(moments, conserved=int(doc["conserved"]))
    return SchemeSpec(str(doc.get("name", "scheme")), vels, basis)


def save_scheme(spec: SchemeSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(scheme_to_json(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scheme(path: str) -> SchemeSpec:
    with open(path) as fh:
        return scheme_from_json(json.load(fh))
