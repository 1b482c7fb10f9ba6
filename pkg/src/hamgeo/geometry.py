"""Pointwise geometry of a regular Hamiltonian on a cotangent bundle.

Everything here is a function of a Hamiltonian and one phase point: the
momentum Hessian metric and its inverse, the Hamiltonian vector field, the
canonical nonlinear connection, its curvature, the Jacobi endomorphism,
the coefficients of the dynamical covariant derivative, and the Berwald
connection coefficients, together with the residuals of the tensor
identities those objects satisfy.

All derivatives come from one nested-jet evaluation per (Hamiltonian,
point) pair: an order-3 jet whose coefficients are order-1 jets, which
exposes exact fourth derivatives.  Intermediate quantities such as the
connection are carried as order-1 or order-2 jets ("germs") so that their
own derivatives are again exact, never finite differences.

Index conventions (0-based slots): x^i is slot i, p_i is slot n+i.
A[k][j] = d2H/dp_k dx^j, B[i][j] = d2H/dx^i dx^j, G[i][j] = d2H/dp_i dp_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .errors import DimensionError, HorizontalityError, RegularityError
from .expr import Expression, HamiltonianSpec, VectorFieldSpec
from .jets import Jet, jet_lift, nested_jet_lift
from .phase import PhasePoint

__all__ = [
    "GeometryReport",
    "BerwaldCoefficients",
    "metric",
    "metric_rcond",
    "hamiltonian_vector_field",
    "connection",
    "connection_general",
    "connection_germs",
    "adapted_derivative",
    "curvature",
    "jacobi_endomorphism",
    "jacobi_via_curvature",
    "is_horizontal",
    "nabla_coefficients",
    "berwald_coefficients",
    "nabla_J_residual",
    "nabla_metric_residual",
    "nabla_vector_field",
    "geometry_report",
    "RCOND_FLOOR",
]

#: Reciprocal-condition threshold below which the momentum Hessian is
#: treated as singular and geometry is refused.
RCOND_FLOOR = 1e-12


# --------------------------------------------------------------------------
# small-ring linear algebra: entries are floats or jets


def _as_jet(value, m: int, order: int) -> Jet:
    if isinstance(value, Jet):
        return value
    return Jet.constant(float(value), m, order)


def _ring_matmul(left, right):
    n, k, c = len(left), len(right), len(right[0])
    return [
        [sum(left[i][t] * right[t][j] for t in range(k)) for j in range(c)]
        for i in range(n)
    ]


def _pivot_size(value) -> float:
    while isinstance(value, Jet):
        value = value.c0
    return abs(float(value))


def _ring_inverse(matrix):
    """Gauss-Jordan inverse with partial pivoting over a commutative ring.

    Entries may be floats or jets; pivots are chosen by the magnitude of
    the underlying float value.  Callers are expected to have screened the
    float matrix for conditioning already.
    """
    n = len(matrix)
    work = [list(row) for row in matrix]
    one, zero = 1.0, 0.0
    inverse = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: _pivot_size(work[r][col]))
        if _pivot_size(work[pivot_row][col]) == 0.0:
            raise RegularityError("matrix not invertible", rcond=0.0)
        work[col], work[pivot_row] = work[pivot_row], work[col]
        inverse[col], inverse[pivot_row] = inverse[pivot_row], inverse[col]
        pivot = work[col][col]
        for j in range(n):
            work[col][j] = work[col][j] / pivot
            inverse[col][j] = inverse[col][j] / pivot
        for row in range(n):
            if row == col:
                continue
            factor = work[row][col]
            for j in range(n):
                work[row][j] = work[row][j] - factor * work[col][j]
                inverse[row][j] = inverse[row][j] - factor * inverse[col][j]
    return inverse


def _c0_array(rows) -> np.ndarray:
    def value(entry):
        return float(entry.c0) if isinstance(entry, Jet) else float(entry)

    return np.array([[value(e) for e in row] for row in rows])


def _slope(entry, z: int) -> float:
    """d(entry)/d(slot z) for a germ entry that may have decayed to a float."""
    if isinstance(entry, Jet):
        return float(entry.c1[z])
    return 0.0


# --------------------------------------------------------------------------
# per-(Hamiltonian, point) workspace


class _Workspace:
    """All tensors of one Hamiltonian at one point, computed lazily.

    Float matrices are the value lanes of the corresponding germ matrices,
    so every route that mixes values and derivatives is self-consistent.
    """

    def __init__(self, ham: HamiltonianSpec, point: PhasePoint):
        if point.dim != ham.dim:
            raise DimensionError(
                f"point has dimension {point.dim}, Hamiltonian {ham.dim}"
            )
        self.ham = ham
        self.point = point
        self.n = ham.dim
        self.m = 2 * ham.dim

    # -- raw jets ----------------------------------------------------------

    @cached_property
    def nested(self) -> Jet:
        return nested_jet_lift(self.ham.expr, self.point)

    def germ1(self, multi: Sequence[int]) -> Jet:
        """Order-1 germ of a partial derivative of H (exact one order up)."""
        return _as_jet(self.nested.partial(multi), self.m, 1)

    def germ2(self, multi: Sequence[int]) -> Jet:
        """Order-2 germ of a second partial of H; its own second
        derivatives are fourth derivatives of H."""
        nested, m = self.nested, self.m
        idx = tuple(sorted(multi))
        c0 = _as_jet(nested.partial(idx), m, 1).c0
        c1 = np.empty(m)
        for w in range(m):
            c1[w] = _as_jet(nested.partial(idx + (w,)), m, 1).c0
        half = m * (m + 1) // 2
        c2 = np.empty(half)
        t = 0
        for z in range(m):
            germ = _as_jet(nested.partial(tuple(sorted(idx + (z,)))), m, 1)
            for w in range(z, m):
                c2[t] = germ.c1[w]
                t += 1
        return Jet(m, 2, float(c0), c1, c2, None)

    # -- Hamiltonian vector field -------------------------------------------

    @cached_property
    def flow_germs(self) -> list:
        """Order-1 germs of (xi^1..xi^n, chi_1..chi_n)."""
        n = self.n
        xi = [self.germ1((n + i,)) for i in range(n)]
        chi = [-self.germ1((i,)) for i in range(n)]
        return xi + chi

    @cached_property
    def flow(self) -> np.ndarray:
        return np.array([g.c0 for g in self.flow_germs])

    @cached_property
    def xi(self) -> np.ndarray:
        return self.flow[: self.n]

    @cached_property
    def chi(self) -> np.ndarray:
        return self.flow[self.n:]

    # -- second derivatives of H --------------------------------------------

    @cached_property
    def a_germs(self) -> list:
        n = self.n
        return [
            [self.germ1((n + k, j)) for j in range(n)] for k in range(n)
        ]

    @cached_property
    def A(self) -> np.ndarray:
        return _c0_array(self.a_germs)

    @cached_property
    def B(self) -> np.ndarray:
        n = self.n
        return np.array(
            [[float(_as_jet(self.nested.partial((i, j)), self.m, 1).c0)
              for j in range(n)] for i in range(n)]
        )

    @cached_property
    def g_upper_germs(self) -> list:
        n = self.n
        return [
            [self.germ2((n + i, n + j)) for j in range(n)] for i in range(n)
        ]

    @cached_property
    def g_upper(self) -> np.ndarray:
        return _c0_array(self.g_upper_germs)

    @cached_property
    def rcond(self) -> float:
        singular_values = np.linalg.svd(self.g_upper, compute_uv=False)
        top = float(singular_values[0])
        if top == 0.0:
            return 0.0
        return float(singular_values[-1]) / top

    def require_regular(self):
        if not np.isfinite(self.rcond) or self.rcond < RCOND_FLOOR:
            raise RegularityError(
                f"momentum Hessian of {self.ham.name!r} is singular at "
                f"{self.point} (reciprocal condition {self.rcond:.3e})",
                rcond=self.rcond,
            )

    @cached_property
    def g_lower_germs(self) -> list:
        self.require_regular()
        return _ring_inverse(self.g_upper_germs)

    @cached_property
    def g_lower(self) -> np.ndarray:
        return _c0_array(self.g_lower_germs)

    # -- canonical nonlinear connection --------------------------------------

    @cached_property
    def n_germs(self) -> list:
        """Order-1 germs of the canonical connection coefficients.

        N_ij = ({g_ij, H} - g_ik A[k][j] - g_jk A[k][i]) / 2, where the
        bracket convention is fixed by the worked example: {g, H} is minus
        the derivative of g_ij along the Hamiltonian vector field.
        """
        n = self.n
        t = _ring_matmul(self.g_lower_germs, self.a_germs)
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                bracket = -sum(
                    self.flow_germs[z] * self.g_lower_germs[i][j].derivative(z)
                    for z in range(self.m)
                )
                row.append((bracket - t[i][j] - t[j][i]) * 0.5)
            out.append(row)
        return out

    @cached_property
    def N(self) -> np.ndarray:
        return _c0_array(self.n_germs)

    @cached_property
    def dN(self) -> np.ndarray:
        """dN[z][i][j] = d N_ij / d(slot z)."""
        n = self.n
        out = np.empty((self.m, n, n))
        for z in range(self.m):
            for i in range(n):
                for j in range(n):
                    out[z, i, j] = _slope(self.n_germs[i][j], z)
        return out

    def delta_of(self, values: np.ndarray, slopes: np.ndarray) -> np.ndarray:
        """Adapted x-derivatives of a tensor given its flat slopes.

        ``slopes[z]`` holds d(tensor)/d(slot z); the result's leading axis
        is the adapted direction i: d/dx^i + N_ij d/dp_j.
        """
        n = self.n
        return np.stack(
            [
                slopes[i] + sum(self.N[i][l] * slopes[n + l] for l in range(n))
                for i in range(n)
            ]
        )

    @cached_property
    def R3(self) -> np.ndarray:
        """Curvature R[i][j][k] = delta_i N_jk - delta_j N_ik."""
        delta_n = self.delta_of(self.N, self.dN)
        return delta_n - delta_n.transpose(1, 0, 2)

    @cached_property
    def Phi(self) -> np.ndarray:
        rho_n = np.einsum("z,zjk->jk", self.flow, self.dN)
        return (
            self.A.T @ self.N
            + self.N @ self.A
            + self.N @ self.g_upper @ self.N
            + self.B
            + rho_n
        )

    @cached_property
    def Phi_contraction(self) -> np.ndarray:
        return np.einsum("k,kij->ij", self.xi, self.R3)

    # -- covariant-derivative coefficients -----------------------------------

    @cached_property
    def nabla_v(self) -> np.ndarray:
        """nabla_v[j][i]: coefficient of d/dp_i in the covariant derivative
        of d/dp_j along the flow."""
        self.require_regular()
        return self.A + self.g_upper @ self.N

    @cached_property
    def nabla_h(self) -> np.ndarray:
        return -(self.nabla_v.T)

    @cached_property
    def horizontality_residual(self) -> np.ndarray:
        return self.chi - self.xi @ self.N

    # -- Berwald connection ---------------------------------------------------

    @cached_property
    def d_g_upper(self) -> np.ndarray:
        n = self.n
        out = np.empty((self.m, n, n))
        for z in range(self.m):
            for j in range(n):
                for k in range(n):
                    out[z, j, k] = _slope(self.g_upper_germs[j][k], z)
        return out

    @cached_property
    def d_g_lower(self) -> np.ndarray:
        n = self.n
        out = np.empty((self.m, n, n))
        for z in range(self.m):
            for j in range(n):
                for k in range(n):
                    out[z, j, k] = _slope(self.g_lower_germs[j][k], z)
        return out

    @cached_property
    def berwald(self) -> "BerwaldCoefficients":
        n = self.n
        glow, gup = self.g_lower, self.g_upper
        delta_g = self.delta_of(self.g_lower, self.d_g_lower)  # [i][j][k]
        hh = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for s in range(n):
                    hh[i, j, s] = sum(
                        gup[k, s]
                        * (
                            delta_g[i, j, k]
                            - sum(
                                glow[j, r] * self.dN[n + r, i, k]
                                for r in range(n)
                            )
                        )
                        for k in range(n)
                    )
        hv = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for r in range(n):
                    hv[i, j, r] = -self.dN[n + j, i, r]
        vv = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                for s in range(n):
                    vv[i, j, s] = sum(
                        glow[k, s] * self.d_g_upper[n + i, j, k]
                        for k in range(n)
                    )
        return BerwaldCoefficients(
            hh=hh, hv=hv, vh=np.zeros((n, n, n)), vv=vv
        )


@lru_cache(maxsize=None)
def _workspace(ham: HamiltonianSpec, point: PhasePoint) -> _Workspace:
    return _Workspace(ham, point)


# --------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class BerwaldCoefficients:
    """Coefficient families of the Berwald linear connection.

    ``hh[i][j][s]``: horizontal output of transporting the i-th adapted
    x-direction along the j-th; ``hv[i][j][r]``: vertical output on the
    vertical basis; ``vh`` is identically zero; ``vv[i][j][s]``: vertical
    transport of vertical directions.
    """

    hh: np.ndarray
    hv: np.ndarray
    vh: np.ndarray
    vv: np.ndarray


@dataclass(frozen=True)
class GeometryReport:
    """Every pointwise tensor of one Hamiltonian at one phase point."""

    point: PhasePoint
    g_upper: np.ndarray
    g_lower: np.ndarray
    xi: np.ndarray
    chi: np.ndarray
    N: np.ndarray
    R3: np.ndarray
    Phi: np.ndarray
    nabla_h: np.ndarray
    nabla_v: np.ndarray
    berwald: BerwaldCoefficients
    horizontal: bool
    horizontality_residual: np.ndarray
    rcond: float


# --------------------------------------------------------------------------
# public operations


def metric(ham: HamiltonianSpec, point: PhasePoint):
    """Momentum Hessian g^{ij} and its inverse g_{ij} at one point."""
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.g_upper.copy(), ws.g_lower.copy()


def metric_rcond(ham: HamiltonianSpec, point: PhasePoint) -> float:
    """Reciprocal condition estimate of the momentum Hessian."""
    return _workspace(ham, point).rcond


def hamiltonian_vector_field(ham: HamiltonianSpec, point: PhasePoint):
    """Components (xi^i, chi_i) = (dH/dp_i, -dH/dx^i)."""
    ws = _workspace(ham, point)
    return ws.xi.copy(), ws.chi.copy()


def connection(ham: HamiltonianSpec, point: PhasePoint) -> np.ndarray:
    """Coefficients N_ij of the canonical nonlinear connection."""
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.N.copy()


def connection_general(rho: VectorFieldSpec, point: PhasePoint) -> np.ndarray:
    """Connection induced by a regular vector field (xi^i, chi_i).

    N_ij = ( t_ik dchi_j/dp_k - t_kj dxi^k/dx^i - rho(t_ij) ) / 2, where
    t_ij inverts t^{ij} = dxi^j/dp_i.  Needs no Hamiltonian: for the
    Hamiltonian vector field it reproduces :func:`connection`.
    """
    n = rho.dim
    m = 2 * n
    if point.dim != n:
        raise DimensionError(f"point has dimension {point.dim}, field {n}")
    xi_jets = [jet_lift(e, point, order=2) for e in rho.x_components]
    chi_jets = [jet_lift(e, point, order=1) for e in rho.p_components]
    flow = np.array([j.c0 for j in xi_jets] + [j.c0 for j in chi_jets])

    t_up_germs = [
        [xi_jets[j].derivative(n + i) for j in range(n)] for i in range(n)
    ]
    t_up = _c0_array(t_up_germs)
    singular_values = np.linalg.svd(t_up, compute_uv=False)
    top = float(singular_values[0])
    rcond = 0.0 if top == 0.0 else float(singular_values[-1]) / top
    if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise RegularityError(
            f"field is not regular at {point}: dxi/dp has reciprocal "
            f"condition {rcond:.3e}",
            rcond=rcond,
        )
    t_low = _ring_inverse(t_up_germs)

    d_chi_dp = np.array(
        [[chi_jets[j].c1[n + k] for k in range(n)] for j in range(n)]
    )
    d_xi_dx = np.array(
        [[xi_jets[k].c1[i] for i in range(n)] for k in range(n)]
    )
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            rho_t = sum(flow[z] * _slope(t_low[i][j], z) for z in range(m))
            first = sum(
                float(_as_jet(t_low[i][k], m, 1).c0) * d_chi_dp[j][k]
                for k in range(n)
            )
            second = sum(
                float(_as_jet(t_low[k][j], m, 1).c0) * d_xi_dx[k][i]
                for k in range(n)
            )
            out[i, j] = 0.5 * (first - second - rho_t)
    return out


def connection_germs(ham: HamiltonianSpec, point: PhasePoint) -> list:
    """Order-1 germs of the canonical connection (shared with symmetry checks)."""
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.n_germs


def adapted_derivative(ham: HamiltonianSpec, point: PhasePoint, f) -> np.ndarray:
    """Adapted-basis derivatives (delta f / delta x^i) of a scalar.

    ``f`` may be an Expression or an order >= 1 jet at the same point.
    delta f/dx^i = df/dx^i + N_ij df/dp_j.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    if isinstance(f, Expression):
        f = jet_lift(f, point, order=1)
    if f.order < 1 or f.m != ws.m:
        raise DimensionError("need an order >= 1 jet in the 2n phase variables")
    grad = np.array([float(f.c1[z]) for z in range(ws.m)])
    n = ws.n
    return np.array(
        [
            grad[i] + sum(ws.N[i][j] * grad[n + j] for j in range(n))
            for i in range(n)
        ]
    )


def curvature(ham: HamiltonianSpec, point: PhasePoint) -> np.ndarray:
    """Curvature tensor R_ijk of the canonical nonlinear connection."""
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.R3.copy()


def jacobi_endomorphism(ham: HamiltonianSpec, point: PhasePoint) -> np.ndarray:
    """Jacobi endomorphism coefficients via the direct second-order formula."""
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.Phi.copy()


def jacobi_via_curvature(ham: HamiltonianSpec, point: PhasePoint) -> np.ndarray:
    """Jacobi endomorphism as the curvature contraction R_kij xi^k.

    Agrees with :func:`jacobi_endomorphism` wherever the Hamiltonian
    vector field is horizontal.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.Phi_contraction.copy()


def is_horizontal(ham: HamiltonianSpec, point: PhasePoint, tol: float = 1e-10):
    """Whether the Hamiltonian vector field is horizontal at the point.

    Returns (flag, residual) with residual_i = chi_i - xi^k N_ki.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    residual = ws.horizontality_residual.copy()
    return bool(np.max(np.abs(residual)) < tol), residual


def nabla_coefficients(ham: HamiltonianSpec, point: PhasePoint):
    """Coefficient matrices (nabla_h, nabla_v) of the dynamical covariant
    derivative on the adapted basis; nabla_h = -nabla_v transposed."""
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.nabla_h.copy(), ws.nabla_v.copy()


def berwald_coefficients(ham: HamiltonianSpec, point: PhasePoint) -> BerwaldCoefficients:
    ws = _workspace(ham, point)
    ws.require_regular()
    return ws.berwald


def nabla_J_residual(ham: HamiltonianSpec, N_matrix, point: PhasePoint) -> np.ndarray:
    """Residual of the covariant constancy of the adapted tangent structure.

    residual_ij = rho_H(g_ij) + g_kj dxi^k/dx^i - g_ik dchi_j/dp_k + 2 N_ij
    for a caller-supplied symmetric candidate N.  Vanishes exactly when N
    is the canonical connection and is affine in N.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    n = ws.n
    cand = np.asarray(N_matrix, dtype=float)
    if cand.shape != (n, n):
        raise DimensionError(f"candidate connection must be {n}x{n}")
    rho_g = np.array(
        [
            [
                sum(ws.flow[z] * _slope(ws.g_lower_germs[i][j], z)
                    for z in range(ws.m))
                for j in range(n)
            ]
            for i in range(n)
        ]
    )
    return rho_g + ws.A.T @ ws.g_lower + ws.g_lower @ ws.A + 2.0 * cand


def nabla_metric_residual(
    ham: HamiltonianSpec, point: PhasePoint, N_matrix=None
) -> np.ndarray:
    """Residual of the covariant derivative of the vertical metric tensor.

    With coefficients D = nabla_v built from the supplied connection
    (canonical if omitted): residual = rho_H(g_upper) - D g - g D^T.  The
    sign and index placement are pinned by the requirement that the
    canonical connection annihilates the metric.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    n = ws.n
    if N_matrix is None:
        cand = ws.N
    else:
        cand = np.asarray(N_matrix, dtype=float)
        if cand.shape != (n, n):
            raise DimensionError(f"candidate connection must be {n}x{n}")
    coeffs = ws.A + ws.g_upper @ cand
    rho_g_up = np.einsum("z,zjk->jk", ws.flow, ws.d_g_upper)
    return rho_g_up - coeffs @ ws.g_upper - ws.g_upper @ coeffs.T


# --------------------------------------------------------------------------
# the dynamical covariant derivative as an operator on vector fields


def _field_germs(field: VectorFieldSpec, point: PhasePoint) -> list:
    germs = [jet_lift(e, point, order=1) for e in field.x_components]
    germs += [jet_lift(e, point, order=1) for e in field.p_components]
    return germs


def nabla_vector_field(
    ham: HamiltonianSpec, field: VectorFieldSpec, point: PhasePoint
) -> np.ndarray:
    """Covariant derivative of a field along the flow, in the natural basis.

    nabla Y = h[rho_H, hY] + v[rho_H, vY] with the canonical-connection
    projectors; returns the 2n components at the point.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    n, m = ws.n, ws.m
    if field.dim != n:
        raise DimensionError(f"field has dimension {field.dim}, expected {n}")
    y = _field_germs(field, point)
    n_germs = ws.n_germs

    # germs of the projections hY = (a, a.N) and vY = (0, b)
    a = y[:n]
    a_dot_n = [
        sum(a[k] * n_germs[k][i] for k in range(n)) for i in range(n)
    ]
    h_y = a + a_dot_n
    b = [y[n + i] - a_dot_n[i] for i in range(n)]
    zero = Jet.constant(0.0, m, 1)
    v_y = [zero] * n + b

    rho = ws.flow_germs

    def bracket(w):
        return np.array(
            [
                sum(
                    rho[z].c0 * w[comp].c1[z] - w[z].c0 * rho[comp].c1[z]
                    for z in range(m)
                )
                for comp in range(m)
            ]
        )

    br_h = bracket(h_y)
    br_v = bracket(v_y)
    # float-level projections of the two brackets, then back to natural basis
    h_part_x = br_h[:n]
    v_part_p = br_v[n:] - br_v[:n] @ ws.N
    result = np.empty(m)
    result[:n] = h_part_x
    result[n:] = h_part_x @ ws.N + v_part_p
    return result


def berwald_vs_nabla(
    ham: HamiltonianSpec, field: VectorFieldSpec, point: PhasePoint
) -> np.ndarray:
    """Difference between the Berwald transport along the flow and nabla.

    Both sides are computed independently: the Berwald route expands the
    linear connection on the adapted components of the field, the other
    route uses the bracket formula of :func:`nabla_vector_field`.  The
    underlying equality assumes the flow is horizontal; violating that
    precondition raises :class:`HorizontalityError`.
    """
    ws = _workspace(ham, point)
    ws.require_regular()
    n, m = ws.n, ws.m
    if field.dim != n:
        raise DimensionError(f"field has dimension {field.dim}, expected {n}")
    residual = ws.horizontality_residual
    worst = float(np.max(np.abs(residual)))
    if worst >= 1e-8:
        raise HorizontalityError(
            f"flow is not horizontal at {point} "
            f"(max residual {worst:.3e}); the transport equality does not apply",
            residual=residual,
        )

    y = _field_germs(field, point)
    n_germs = ws.n_germs
    a = y[:n]
    a_dot_n = [
        sum(a[k] * n_germs[k][i] for k in range(n)) for i in range(n)
    ]
    b = [y[n + i] - a_dot_n[i] for i in range(n)]

    xi, w = ws.xi, residual
    bw = ws.berwald

    def adapted(germ):
        return np.array(
            [
                germ.c1[i] + sum(ws.N[i][l] * germ.c1[n + l] for l in range(n))
                for i in range(n)
            ]
        )

    a_vals = np.array([g.c0 for g in a])
    b_vals = np.array([g.c0 for g in b])
    out_h = np.empty(n)
    for s in range(n):
        delta_a = adapted(a[s])
        out_h[s] = (
            xi @ delta_a
            + sum(
                xi[i] * a_vals[j] * bw.hh[i, j, s]
                for i in range(n)
                for j in range(n)
            )
            + sum(w[i] * a[s].c1[n + i] for i in range(n))
        )
    out_v = np.empty(n)
    for r in range(n):
        delta_b = adapted(b[r])
        out_v[r] = (
            xi @ delta_b
            + sum(
                xi[i] * b_vals[j] * bw.hv[i, j, r]
                for i in range(n)
                for j in range(n)
            )
            + sum(w[i] * b[r].c1[n + i] for i in range(n))
            + sum(
                w[i] * b_vals[j] * bw.vv[i, j, r]
                for i in range(n)
                for j in range(n)
            )
        )
    transport = np.empty(m)
    transport[:n] = out_h
    transport[n:] = out_h @ ws.N + out_v
    return transport - nabla_vector_field(ham, field, point)


def geometry_report(
    ham: HamiltonianSpec, point: PhasePoint, tol: float = 1e-10
) -> GeometryReport:
    """Every pointwise tensor at once (used by the command-line report)."""
    ws = _workspace(ham, point)
    ws.require_regular()
    horizontal, residual = is_horizontal(ham, point, tol)
    return GeometryReport(
        point=point,
        g_upper=ws.g_upper.copy(),
        g_lower=ws.g_lower.copy(),
        xi=ws.xi.copy(),
        chi=ws.chi.copy(),
        N=ws.N.copy(),
        R3=ws.R3.copy(),
        Phi=ws.Phi.copy(),
        nabla_h=ws.nabla_h.copy(),
        nabla_v=ws.nabla_v.copy(),
        berwald=ws.berwald,
        horizontal=horizontal,
        horizontality_residual=residual,
        rcond=ws.rcond,
    )
