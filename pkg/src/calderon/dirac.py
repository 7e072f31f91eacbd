"""Product-form Dirac models on the segment and the cylinder, and their
invertible double.

The model operator is D+ = G (d/du + B) on u in [0,1] with G = i sigma_2
(tensored with the twist) and tangential part B = sigma_1 (-i d/dy) + sigma_3
V(y); G is unitary with G* = -G and anticommutes with B.  The double is
realized as a transmission problem for the pair (phi, tau), where phi is the
side-1 section and tau is the side-2 section pulled back to [0,1] in the
Clifford gauge tau = G* sigma_2-side-section.  In that gauge the side-2
operator reads (-d/du + B) and the gluing conditions are

    tau(0) = phi(0),        tau(1) = -phi(1),

so homogeneous solutions phi = exp(-uB) a, tau = exp(uB) a must satisfy
exp(2B) a = -a, which is impossible for self-adjoint B: the double is
injective mode by mode.

Two discretizations are provided: an analytic per-mode path (Chebyshev
collocation in u, exact in the y-modes, constant V only) and a dense path
(4th-order finite differences in u with one-sided closures, pseudospectral
in y, V(y) allowed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .csalg import CStarAlgebra
from .errors import CertificationError, StructureError
from .hilbmod import ModuleOperator

SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: smallest certified singular value for the assembled double
DOUBLE_CERT_TOL = 1e-10


# -- u-axis discretizations --------------------------------------------


def chebyshev_nodes_diff(n):
    """Chebyshev-Lobatto nodes on [0,1] (ascending) and the differentiation
    matrix that is exact on polynomials of degree n."""
    if n < 2:
        raise StructureError("need at least 2 intervals")
    j = np.arange(n + 1)
    x = np.cos(np.pi * j / n)  # descending on [-1,1]
    c = np.ones(n + 1)
    c[0] = c[n] = 2.0
    c = c * (-1.0) ** j
    big_x = np.tile(x, (n + 1, 1)).T
    dx = big_x - big_x.T
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    # map x -> u = (1-x)/2: ascending nodes, d/du = -2 d/dx
    u = (1.0 - x) / 2.0
    d_u = -2.0 * d
    return u, d_u


def clenshaw_curtis_weights(n):
    """Quadrature weights for the ascending Chebyshev-Lobatto nodes on [0,1]."""
    if n % 2:
        raise StructureError("Clenshaw-Curtis needs an even interval count")
    k = np.arange(0, n // 2 + 1)
    w = np.zeros(n + 1)
    theta = np.pi * np.arange(n + 1) / n
    for j in range(n + 1):
        s = 0.0
        for kk in range(1, n // 2 + 1):
            b = 2.0 if kk < n // 2 else 1.0
            s += b / (4.0 * kk**2 - 1.0) * np.cos(2.0 * kk * theta[j])
        w[j] = (2.0 / n) * (1.0 - s)
    w[0] /= 2.0
    w[n] /= 2.0
    return w / 2.0  # interval length 1 (weights are symmetric in the node)


_FD4_EDGE = np.array(
    [
        [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0],
        [-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0],
    ]
)
_FD4_CENTER = np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0])


def fd4_diff(n, h):
    """4th-order first-derivative matrix on n+1 uniform nodes, one-sided
    closures at the two boundary rows on each end."""
    if n < 4:
        raise StructureError("need at least 4 intervals for the FD4 stencil")
    d = np.zeros((n + 1, n + 1))
    d[0, :5] = _FD4_EDGE[0]
    d[1, :5] = _FD4_EDGE[1]
    for i in range(2, n - 1):
        d[i, i - 2 : i + 3] = _FD4_CENTER
    d[n - 1, n - 4 :] = -_FD4_EDGE[1][::-1]
    d[n, n - 4 :] = -_FD4_EDGE[0][::-1]
    return d / h


def simpson_weights(n, h):
    if n % 2:
        raise StructureError("Simpson needs an even interval count")
    w = np.zeros(n + 1)
    w[0] = w[n] = 1.0
    w[1:n:2] = 4.0
    w[2:n:2] = 2.0
    return w * h / 3.0


@dataclass(frozen=True)
class CollarGrid:
    """u-discretization of the collar [0,1] plus the boundary circle."""

    n_u: int  # number of u-intervals
    n_y: int  # y-points on the boundary circle (1 for the segment)
    kind: str  # 'chebyshev' (analytic path) | 'uniform' (dense path)

    def __post_init__(self):
        if self.kind not in ("chebyshev", "uniform"):
            raise StructureError("grid kind must be chebyshev or uniform")
        if self.n_u < 4 or self.n_u % 2:
            raise StructureError("n_u must be even and >= 4")
        if self.n_y != 1 and (self.n_y < 8 or self.n_y % 2):
            raise StructureError("n_y must be 1 or even >= 8")

    @property
    def n_nodes(self):
        return self.n_u + 1

    def u_nodes(self):
        if self.kind == "chebyshev":
            return chebyshev_nodes_diff(self.n_u)[0]
        return np.linspace(0.0, 1.0, self.n_u + 1)

    def diff_matrix(self):
        if self.kind == "chebyshev":
            return chebyshev_nodes_diff(self.n_u)[1]
        return fd4_diff(self.n_u, 1.0 / self.n_u)

    def quad_weights(self):
        if self.kind == "chebyshev":
            return clenshaw_curtis_weights(self.n_u)
        return simpson_weights(self.n_u, 1.0 / self.n_u)

    def eta(self):
        return np.fft.fftfreq(self.n_y, d=1.0 / self.n_y)

    def dealiased_eta(self):
        """Integer y-frequencies kept by the 2/3 rule, ascending."""
        if self.n_y == 1:
            return np.array([0.0])
        cut = self.n_y // 3
        return np.arange(-cut, cut + 1, dtype=float)


class CollarFunction:
    """Section sampled on a collar grid: shape (n_nodes, n_y, fiber, m)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 4 or values.shape[:2] != (grid.n_nodes, grid.n_y):
            raise StructureError(
                "values shape %r does not match collar grid" % (values.shape,)
            )
        self.grid = grid
        self.values = values

    def copy(self, values=None):
        return CollarFunction(
            self.grid, self.values.copy() if values is None else values
        )

    def __sub__(self, other):
        return CollarFunction(self.grid, self.values - other.values)

    def __add__(self, other):
        return CollarFunction(self.grid, self.values + other.values)

    def __rmul__(self, scalar):
        return CollarFunction(self.grid, complex(scalar) * self.values)

    def norm(self):
        """Quadrature L^2 norm (Frobenius fiberwise)."""
        w = self.grid.quad_weights()
        dens = np.sum(np.abs(self.values) ** 2, axis=(2, 3))
        dy = 2.0 * np.pi / self.grid.n_y if self.grid.n_y > 1 else 1.0
        return float(np.sqrt(np.sum(w[:, None] * dens) * dy))

    def max_abs(self):
        return float(np.abs(self.values).max())


# -- the model ----------------------------------------------------------


@dataclass
class ModeChannel:
    """One per-mode block: effective frequency and fiber basis.

    ``basis`` embeds the channel's twist subspace into the full twist fiber
    C^(r*m); ``b_mat`` is the tangential matrix on spinor x subspace.
    """

    eta: float
    shift: float
    basis: np.ndarray  # (r*m, q)
    b_mat: np.ndarray  # (2q, 2q)

    @property
    def eta_eff(self):
        return self.eta + self.shift

    @property
    def dim(self):
        return self.b_mat.shape[0]


class ProductDiracModel:
    """The data (G, B) of a product-form Dirac operator.

    Parameters
    ----------
    base : 'segment' | 'cylinder'
    algebra : CStarAlgebra
    r : twist rank (the coefficient bundle is A^r)
    v : the sigma_3 potential; a self-adjoint ModuleOperator A^r -> A^r, or
        a callable y -> (r*m, r*m) Hermitian complex matrix for the
        y-dependent dense path, or None (= 0)
    w : optional self-adjoint sigma_1 term (segment only)
    holonomy : optional unitary ModuleOperator A^r -> A^r twisting the
        y-periodicity; must commute with constant v
    """

    def __init__(self, base, algebra, r=1, v=None, w=None, holonomy=None):
        if base not in ("segment", "cylinder"):
            raise StructureError("base must be 'segment' or 'cylinder'")
        self.base = base
        self.algebra = algebra
        self.r = int(r)
        self.m = algebra.rep_dim
        self.rm = self.r * self.m
        self.n_fiber = 2 * self.rm

        self.v_callable = None
        if callable(v):
            if base != "cylinder":
                raise StructureError("y-dependent v needs the cylinder base")
            self.v_callable = v
            self.v_rep = None
        elif v is None:
            self.v_rep = np.zeros((self.rm, self.rm), dtype=complex)
        else:
            self.v_rep = self._coerce_operator(v, "v")
            if np.linalg.norm(self.v_rep - self.v_rep.conj().T, 2) > 1e-12 * max(
                1.0, np.linalg.norm(self.v_rep, 2)
            ):
                raise StructureError("v must be self-adjoint")

        if w is not None and base != "segment":
            raise StructureError("the sigma_1 term is for the segment model")
        if w is None:
            self.w_rep = np.zeros((self.rm, self.rm), dtype=complex)
        else:
            self.w_rep = self._coerce_operator(w, "w")
            if np.linalg.norm(self.w_rep - self.w_rep.conj().T, 2) > 1e-12 * max(
                1.0, np.linalg.norm(self.w_rep, 2)
            ):
                raise StructureError("w must be self-adjoint")

        if holonomy is None:
            self.h_rep = None
        else:
            self.h_rep = self._coerce_operator(holonomy, "holonomy")
            defect = np.linalg.norm(
                self.h_rep @ self.h_rep.conj().T - np.eye(self.rm), 2
            )
            if defect > 1e-10:
                raise StructureError("holonomy must be unitary")
            if self.v_rep is not None:
                comm = np.linalg.norm(
                    self.h_rep @ self.v_rep - self.v_rep @ self.h_rep, 2
                )
                if comm > 1e-10:
                    raise StructureError("holonomy must commute with v")
            if self.v_callable is not None:
                raise StructureError(
                    "holonomy with y-dependent v is not supported"
                )
        self._check_clifford()

    def _coerce_operator(self, op, name):
        if isinstance(op, ModuleOperator):
            if op.algebra != self.algebra or op.source_rank != self.r or (
                op.target_rank != self.r
            ):
                raise StructureError("%s has wrong shape/algebra" % name)
            return op.rep.copy()
        mat = np.asarray(op, dtype=complex)
        if mat.shape != (self.rm, self.rm):
            raise StructureError("%s must be %d x %d" % (name, self.rm, self.rm))
        return mat

    # -- fiber operators ----------------------------------------------

    @property
    def g_rep(self):
        """Clifford gluing matrix: i sigma_2 tensor identity."""
        return np.kron(1j * SIGMA_2, np.eye(self.rm))

    def tangential_matrix(self, eta, v_rep=None):
        """B(eta) = sigma_1 eta + sigma_3 V as a fiber matrix."""
        if v_rep is None:
            if self.v_rep is None:
                raise StructureError("y-dependent v has no per-mode matrix")
            v_rep = self.v_rep
        b = np.kron(SIGMA_1, eta * np.eye(v_rep.shape[0])) + np.kron(
            SIGMA_3, v_rep
        )
        if self.base == "segment":
            b = b + np.kron(SIGMA_1, self.w_rep)
        return b

    def _check_clifford(self):
        g = self.g_rep
        if np.linalg.norm(g @ g.conj().T - np.eye(self.n_fiber), 2) > 1e-12:
            raise StructureError("G must be unitary")
        if np.linalg.norm(g.conj().T + g, 2) > 1e-12:
            raise StructureError("G* must equal -G")
        eta_probe = 1.0 if self.base == "cylinder" else 0.0
        v_probe = (
            self.v_rep
            if self.v_rep is not None
            else np.asarray(self.v_callable(0.0), dtype=complex)
        )
        b = self.tangential_matrix(eta_probe, v_probe)
        if np.linalg.norm(b - b.conj().T, 2) > 1e-10 * max(
            1.0, np.linalg.norm(b, 2)
        ):
            raise StructureError("B must be self-adjoint")
        if np.linalg.norm(g @ b + b @ g, 2) > 1e-10 * max(
            1.0, np.linalg.norm(b, 2)
        ):
            raise StructureError("G and B must anticommute")

    @property
    def y_dependent(self):
        return self.v_callable is not None

    def v_samples(self, n_y):
        """Samples of V(y) on the y-grid, shape (n_y, rm, rm)."""
        y = 2.0 * np.pi * np.arange(n_y) / n_y
        if self.v_callable is not None:
            out = np.stack(
                [np.asarray(self.v_callable(yj), dtype=complex) for yj in y]
            )
        else:
            out = np.broadcast_to(self.v_rep, (n_y,) + self.v_rep.shape).copy()
        return out

    def holonomy_channels(self):
        """Split the twist fiber by holonomy eigenphase.

        Returns a list of (shift, basis) with shift in [0, 1) the frequency
        offset theta / (2 pi) and basis an orthonormal (rm, q) embedding.
        """
        if self.h_rep is None:
            return [(0.0, np.eye(self.rm, dtype=complex))]
        phases, vecs = np.linalg.eig(self.h_rep)
        # unitary: eigenvalues on the circle; cluster by angle
        angles = np.mod(np.angle(phases), 2.0 * np.pi)
        order = np.argsort(angles)
        angles = angles[order]
        vecs = vecs[:, order]
        channels = []
        start = 0
        for i in range(1, len(angles) + 1):
            if i == len(angles) or angles[i] - angles[start] > 1e-9:
                block = vecs[:, start:i]
                block = np.linalg.qr(block)[0]
                channels.append((angles[start] / (2.0 * np.pi), block))
                start = i
        return channels

    def mode_channels(self, n_y):
        """Per-mode tangential blocks over the dealiased frequency set."""
        if self.y_dependent:
            raise StructureError("per-mode channels need constant v")
        channels = []
        if self.base == "segment":
            channels.append(
                ModeChannel(
                    eta=0.0,
                    shift=0.0,
                    basis=np.eye(self.rm, dtype=complex),
                    b_mat=self.tangential_matrix(0.0),
                )
            )
            return channels
        cut = n_y // 3
        for shift, basis in self.holonomy_channels():
            q = basis.shape[1]
            v_sub = basis.conj().T @ self.v_rep @ basis
            for eta in range(-cut, cut + 1):
                eta_eff = eta + shift
                b = np.kron(SIGMA_1, eta_eff * np.eye(q)) + np.kron(
                    SIGMA_3, v_sub
                )
                channels.append(
                    ModeChannel(
                        eta=float(eta), shift=shift, basis=basis, b_mat=b
                    )
                )
        return channels


# -- applying the operator ---------------------------------------------


def _tangential_apply(model, grid, values):
    """Apply B = sigma_1 (-i d/dy) + sigma_3 V(y) to sampled values."""
    n_f = model.n_fiber
    rm = model.rm
    if values.shape[2] != n_f:
        raise StructureError("fiber dimension mismatch")
    if model.h_rep is not None:
        raise StructureError(
            "grid-level application supports trivial holonomy only"
        )
    out = np.zeros_like(values)
    if grid.n_y > 1:
        eta = grid.eta()
        coeffs = np.fft.fft(values, axis=1)
        dy_vals = np.fft.ifft(1j * eta[None, :, None, None] * coeffs, axis=1)
        # sigma_1 tensor (-i d/dy)
        out[:, :, :rm] += -1j * dy_vals[:, :, rm:]
        out[:, :, rm:] += -1j * dy_vals[:, :, :rm]
    v = model.v_samples(grid.n_y)  # (n_y, rm, rm)
    top = np.einsum("yij,uyjm->uyim", v, values[:, :, :rm])
    bot = np.einsum("yij,uyjm->uyim", v, values[:, :, rm:])
    out[:, :, :rm] += top
    out[:, :, rm:] -= bot
    if model.base == "segment" and np.linalg.norm(model.w_rep) > 0:
        out[:, :, :rm] += np.einsum("ij,uyjm->uyim", model.w_rep, values[:, :, rm:])
        out[:, :, rm:] += np.einsum("ij,uyjm->uyim", model.w_rep, values[:, :, :rm])
    return out


def apply_dirac(model, s, side=1):
    """Apply the side-1 operator G(d/du + B) or the pulled-back side-2
    operator (-d/du + B) G*.

    The u-derivative uses the grid's differentiation matrix: spectral
    collocation on a Chebyshev grid (the analytic path), 4th-order finite
    differences with one-sided closures on a uniform grid (the dense path).
    """
    if side not in (1, 2):
        raise StructureError("side must be 1 or 2")
    grid = s.grid
    d = grid.diff_matrix()
    vals = s.values
    if side == 2:
        g_star = model.g_rep.conj().T
        vals = np.einsum("ij,uyjm->uyim", g_star, vals)
    dvals = np.einsum("uv,vyim->uyim", d, vals)
    bvals = _tangential_apply(model, grid, vals)
    if side == 1:
        out = np.einsum(
            "ij,uyjm->uyim", model.g_rep, dvals + bvals
        )
    else:
        out = -dvals + bvals
    return CollarFunction(grid, out)


def apply_dirac_minus(model, s):
    """The formal adjoint D- = (-d/du + B) G* acting on side-1 E^- sections."""
    grid = s.grid
    g_star = model.g_rep.conj().T
    vals = np.einsum("ij,uyjm->uyim", g_star, s.values)
    d = grid.diff_matrix()
    dvals = np.einsum("uv,vyim->uyim", d, vals)
    bvals = _tangential_apply(model, grid, vals)
    return CollarFunction(grid, -dvals + bvals)


def collar_inner_product(s1, s2):
    """A-valued L^2 inner product over the collar, as an m x m matrix."""
    if s1.grid != s2.grid:
        raise StructureError("grid mismatch")
    w = s1.grid.quad_weights()
    dy = 2.0 * np.pi / s1.grid.n_y if s1.grid.n_y > 1 else 1.0
    # sum_i x_i^* y_i at every node, then quadrature
    point = np.einsum("uyim,uyin->umn", s1.values.conj(), s2.values)
    return dy * np.einsum("u,umn->mn", w, point)


def boundary_inner_product(p1, p2, n_y):
    """A-valued inner product of boundary y-profiles (shape (n_y, f, m))."""
    dy = 2.0 * np.pi / n_y if n_y > 1 else 1.0
    return dy * np.einsum("yim,yin->mn", p1.conj(), p2)


def green_residual(model, s1, s2):
    """Defect of the Green formula for a pair of side-1 sections.

    Returns <D+ s1, s2> - <s1, D- s2> + sum over the two boundary circles of
    sign <c(v) s1, s2>, with c(v) = +G at u = 0 and -G at u = 1 (inward
    normal of side 1).  Vanishes identically in the continuum.
    """
    lhs = collar_inner_product(apply_dirac(model, s1, side=1), s2)
    rhs = collar_inner_product(s1, apply_dirac_minus(model, s2))
    g = model.g_rep
    n_y = s1.grid.n_y
    gs_0 = np.einsum("ij,yjm->yim", g, s1.values[0])
    gs_1 = np.einsum("ij,yjm->yim", g, s1.values[-1])
    bnd = boundary_inner_product(gs_0, s2.values[0], n_y) - (
        boundary_inner_product(gs_1, s2.values[-1], n_y)
    )
    from .csalg import AlgebraElement

    return AlgebraElement(model.algebra, lhs - rhs + bnd)


# -- the assembled double ----------------------------------------------


@dataclass
class ChannelSystem:
    channel: ModeChannel
    matrix: np.ndarray
    lu: tuple
    sigma_min: float
    kernel_dim: int


@dataclass
class DoubleSystem:
    """Discretized invertible double with transmission conditions."""

    model: ProductDiracModel
    grid: CollarGrid
    channels: list = field(default_factory=list)
    dense_matrix: np.ndarray = None
    dense_lu: tuple = None
    sigma_min: float = 0.0
    bound_constant: float = 0.0

    @property
    def per_mode(self):
        return self.dense_matrix is None

    def kernel_dims(self):
        if not self.per_mode:
            raise StructureError("kernel dims are a per-mode diagnostic")
        return [cs.kernel_dim for cs in self.channels]


def _row_selection(n):
    """Collocation rows for the two sides: side 1 drops the u=0 node, side 2
    drops the u=1 node; the freed rows carry the transmission conditions."""
    side1 = np.arange(1, n + 1)
    side2 = np.arange(0, n)
    return side1, side2


def _channel_matrix(grid, b_mat):
    """Transmission system for one tangential block.

    Unknowns: (phi at nodes, tau at nodes) x fiber.  Equations: (d/du + B)
    phi = side-1 rhs at the selected nodes, (-d/du + B) tau = side-2 rhs,
    plus the gluing rows phi(0) - tau(0) = jump0, phi(1) + tau(1) = jump1.
    """
    n = grid.n_u
    q2 = b_mat.shape[0]
    d = grid.diff_matrix()
    eye_nodes = np.eye(n + 1)
    side1_rows, side2_rows = _row_selection(n)
    l_plus = np.kron(d, np.eye(q2)) + np.kron(eye_nodes, b_mat)
    l_minus = -np.kron(d, np.eye(q2)) + np.kron(eye_nodes, b_mat)

    dim_side = (n + 1) * q2
    total = 2 * dim_side
    mat = np.zeros((total, total), dtype=complex)
    row = 0
    for i in side1_rows:
        mat[row : row + q2, :dim_side] = l_plus[i * q2 : (i + 1) * q2]
        row += q2
    for i in side2_rows:
        mat[row : row + q2, dim_side:] = l_minus[i * q2 : (i + 1) * q2]
        row += q2
    # gluing rows
    mat[row : row + q2, 0:q2] = np.eye(q2)
    mat[row : row + q2, dim_side : dim_side + q2] = -np.eye(q2)
    row += q2
    mat[row : row + q2, dim_side - q2 : dim_side] = np.eye(q2)
    mat[row : row + q2, total - q2 : total] = np.eye(q2)
    return mat


def _channel_rhs(grid, q2, f1_nodes=None, f2_nodes=None, jump0=None, jump1=None):
    """Right-hand side vector matching :func:`_channel_matrix`.

    ``f1_nodes``/``f2_nodes`` have shape (n+1, q2, ...) and are the
    already-transformed rhs for (d/du + B) phi and (-d/du + B) tau.
    """
    n = grid.n_u
    side1_rows, side2_rows = _row_selection(n)
    tail_shape = ()
    for arr in (f1_nodes, f2_nodes):
        if arr is not None:
            tail_shape = np.asarray(arr).shape[2:]
            break
    else:
        for arr in (jump0, jump1):
            if arr is not None:
                tail_shape = np.asarray(arr).shape[1:]
                break
    rows = (len(side1_rows) + len(side2_rows) + 2) * q2
    rhs = np.zeros((rows,) + tail_shape, dtype=complex)
    row = 0
    if f1_nodes is not None:
        f1_nodes = np.asarray(f1_nodes, dtype=complex)
        for i in side1_rows:
            rhs[row : row + q2] = f1_nodes[i]
            row += q2
    else:
        row += len(side1_rows) * q2
    if f2_nodes is not None:
        f2_nodes = np.asarray(f2_nodes, dtype=complex)
        for i in side2_rows:
            rhs[row : row + q2] = f2_nodes[i]
            row += q2
    else:
        row += len(side2_rows) * q2
    if jump0 is not None:
        rhs[row : row + q2] = jump0
    row += q2
    if jump1 is not None:
        rhs[row : row + q2] = jump1
    return rhs


def _exact_kernel_dim(b_mat):
    """Kernel dimension of the continuum per-mode matching problem.

    Side-1 solutions exp(-uB) a and side-2 solutions exp(uB) c match iff
    a = c and exp(B) c = -exp(-B) a; the stacked matrix has trivial kernel
    for self-adjoint B.
    """
    q2 = b_mat.shape[0]
    e_minus = scipy.linalg.expm(-b_mat)
    e_plus = scipy.linalg.expm(b_mat)
    mat = np.block(
        [
            [np.eye(q2), -np.eye(q2)],
            [e_minus, e_plus],
        ]
    )
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s <= 1e-10 * s[0]))


def build_double(model, grid, path=None):
    """Assemble the discretized invertible double and certify injectivity.

    ``path`` defaults to per-mode for constant V on a Chebyshev grid or any
    constant-V uniform grid, and to the dense 2-d assembly for y-dependent
    V.  The certificate is sigma_min of the assembled system; the discrete
    analogue of the lower bound ||sigma|| <= C ||D sigma|| is reported as
    bound_constant = 1 / sigma_min.
    """
    if path is None:
        path = "dense2d" if model.y_dependent else "per-mode"
    if path == "per-mode":
        channels = []
        sigma_min = np.inf
        for ch in model.mode_channels(grid.n_y):
            mat = _channel_matrix(grid, ch.b_mat)
            s = np.linalg.svd(mat, compute_uv=False)
            lu = scipy.linalg.lu_factor(mat)
            channels.append(
                ChannelSystem(
                    channel=ch,
                    matrix=mat,
                    lu=lu,
                    sigma_min=float(s[-1]),
                    kernel_dim=_exact_kernel_dim(ch.b_mat),
                )
            )
            sigma_min = min(sigma_min, float(s[-1]))
        sys = DoubleSystem(
            model=model,
            grid=grid,
            channels=channels,
            sigma_min=float(sigma_min),
            bound_constant=float(1.0 / sigma_min),
        )
    elif path == "dense2d":
        mat = _dense2d_matrix(model, grid)
        s = np.linalg.svd(mat, compute_uv=False)
        sigma_min = float(s[-1])
        sys = DoubleSystem(
            model=model,
            grid=grid,
            dense_matrix=mat,
            dense_lu=scipy.linalg.lu_factor(mat),
            sigma_min=sigma_min,
            bound_constant=float(1.0 / sigma_min),
        )
    else:
        raise StructureError("unknown path %r" % (path,))
    if sys.sigma_min < DOUBLE_CERT_TOL:
        raise CertificationError(
            "double not certifiably invertible (sigma_min %.3e)"
            % sys.sigma_min
        )
    return sys


def _tangential_big_matrix(model, grid):
    """B as a dense matrix over (y-points x fiber)."""
    n_y = grid.n_y
    rm = model.rm
    n_f = model.n_fiber
    if n_y > 1:
        # spectral differentiation matrix on the y-circle
        f = np.fft.fft(np.eye(n_y), axis=0)
        eta = grid.eta()
        d_y = np.real_if_close(
            np.linalg.inv(f) @ (1j * np.diag(eta)) @ f
        ).astype(complex)
    else:
        d_y = np.zeros((1, 1), dtype=complex)
    v = model.v_samples(n_y)
    big = np.zeros((n_y * n_f, n_y * n_f), dtype=complex)
    s1 = np.kron(SIGMA_1, np.eye(rm))
    for j in range(n_y):
        block = np.kron(SIGMA_3, v[j])
        if model.base == "segment":
            block = block + np.kron(SIGMA_1, model.w_rep)
        big[j * n_f : (j + 1) * n_f, j * n_f : (j + 1) * n_f] += block
    if n_y > 1:
        big += np.kron(-1j * d_y, s1)
    return big


def _dense2d_matrix(model, grid):
    """Full transmission system with y-coupling (dense path, V(y))."""
    if grid.kind != "uniform":
        raise StructureError("the dense path uses the uniform grid")
    b_big = _tangential_big_matrix(model, grid)
    # same layout as the per-mode system, with the y-coupled tangential block
    return _channel_matrix(grid, b_big)


def _solve_channel(sys_or_lu, rhs):
    return scipy.linalg.lu_solve(sys_or_lu, rhs)


def _values_to_channel(values, ch, grid):
    """Project sampled values onto one mode channel: (n_nodes, 2q[, cols])."""
    rm = values.shape[2] // 2
    if grid.n_y > 1:
        coeffs = np.fft.fft(values, axis=1) / grid.n_y
        idx = int(ch.eta) % grid.n_y
        slab = coeffs[:, idx]
    else:
        slab = values[:, 0]
    top = np.einsum("fq,ufm->uqm", ch.basis.conj(), slab[:, :rm])
    bot = np.einsum("fq,ufm->uqm", ch.basis.conj(), slab[:, rm:])
    return np.concatenate([top, bot], axis=1)


def _channel_to_values(channel_vals, ch, grid, n_fiber, out=None):
    """Scatter per-channel nodal values back to the physical grid."""
    q = ch.basis.shape[1]
    n_nodes = channel_vals.shape[0]
    m_cols = channel_vals.shape[-1]
    rm = n_fiber // 2
    slab = np.zeros((n_nodes, n_fiber, m_cols), dtype=complex)
    slab[:, :rm] = np.einsum("fq,uqm->ufm", ch.basis, channel_vals[:, :q])
    slab[:, rm:] = np.einsum("fq,uqm->ufm", ch.basis, channel_vals[:, q:])
    if out is None:
        out = np.zeros((n_nodes, grid.n_y, n_fiber, m_cols), dtype=complex)
    if grid.n_y > 1:
        y = 2.0 * np.pi * np.arange(grid.n_y) / grid.n_y
        phase = np.exp(1j * ch.eta_eff * y)
        out += phase[None, :, None, None] * slab[:, None]
    else:
        out[:, 0] += slab
    return out


def invert_double(sys, f1, f2=None):
    """Solve the doubled operator with transmission conditions.

    ``f1`` is the side-1 right-hand side for D+ phi = f1 (E^- valued);
    ``f2`` the pulled-back side-2 rhs for (-d/du + B) tau = f2 (defaults to
    zero).  Returns the pair (phi, tau) of CollarFunctions.
    """
    grid = sys.grid
    model = sys.model
    if model.h_rep is not None:
        raise StructureError(
            "grid-level solves support trivial holonomy only; nontrivial "
            "holonomy enters through the per-mode boundary projectors"
        )
    n_fiber = model.n_fiber
    g_star = model.g_rep.conj().T
    f1_t = np.einsum("ij,uyjm->uyim", g_star, f1.values)
    f2_vals = (
        np.zeros_like(f1.values) if f2 is None else f2.values.astype(complex)
    )
    m_cols = f1.values.shape[-1]
    n_nodes = grid.n_nodes

    if sys.per_mode:
        phi = np.zeros((n_nodes, grid.n_y, n_fiber, m_cols), dtype=complex)
        tau = np.zeros_like(phi)
        for cs in sys.channels:
            ch = cs.channel
            q2 = ch.dim
            f1_ch = _values_to_channel(f1_t, ch, grid)
            f2_ch = _values_to_channel(f2_vals, ch, grid)
            rhs = _channel_rhs(
                grid, q2, f1_nodes=f1_ch, f2_nodes=f2_ch
            )
            sol = _solve_channel(cs.lu, rhs.reshape(rhs.shape[0], -1))
            sol = sol.reshape(2, n_nodes, q2, m_cols)
            _channel_to_values(sol[0], ch, grid, n_fiber, out=phi)
            _channel_to_values(sol[1], ch, grid, n_fiber, out=tau)
        return CollarFunction(grid, phi), CollarFunction(grid, tau)

    # dense path
    blk = grid.n_y * n_fiber
    f1_nodes = f1_t.reshape(n_nodes, blk, m_cols)
    f2_nodes = f2_vals.reshape(n_nodes, blk, m_cols)
    rhs = _channel_rhs(grid, blk, f1_nodes=f1_nodes, f2_nodes=f2_nodes)
    sol = scipy.linalg.lu_solve(sys.dense_lu, rhs.reshape(rhs.shape[0], -1))
    sol = sol.reshape(2, n_nodes, grid.n_y, n_fiber, m_cols)
    return CollarFunction(grid, sol[0]), CollarFunction(grid, sol[1])


def ghost_solution_check(sys):
    """Certify that zero-Cauchy-trace side-1 solutions vanish.

    Stacks the side-1 collocation rows at every node with the two trace
    rows and reports the smallest singular value of the stacked operator
    per channel (or of the dense stack); a trivial kernel certifies the
    absence of discrete ghost solutions.
    """
    grid = sys.grid
    n = grid.n_u
    d = grid.diff_matrix()
    eye_nodes = np.eye(n + 1)

    def stacked_sigma(b_big):
        q2 = b_big.shape[0]
        l_plus = np.kron(d, np.eye(q2)) + np.kron(eye_nodes, b_big)
        trace_rows = np.zeros((2 * q2, (n + 1) * q2), dtype=complex)
        trace_rows[:q2, :q2] = np.eye(q2)
        trace_rows[q2:, n * q2 :] = np.eye(q2)
        stack = np.vstack([l_plus, trace_rows])
        s = np.linalg.svd(stack, compute_uv=False)
        return float(s[-1])

    if sys.per_mode:
        per_channel = [
            stacked_sigma(cs.channel.b_mat) for cs in sys.channels
        ]
        return {
            "sigma_min": min(per_channel),
            "per_channel": per_channel,
            "trivial_kernel": bool(min(per_channel) > 1e-8),
        }
    b_big = _tangential_big_matrix(sys.model, grid)
    sigma = stacked_sigma(b_big)
    return {
        "sigma_min": sigma,
        "per_channel": [sigma],
        "trivial_kernel": bool(sigma > 1e-8),
    }
