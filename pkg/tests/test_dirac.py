import numpy as np
import pytest
import scipy.linalg

from calderon.csalg import CStarAlgebra
from calderon.csalg import norm as alg_norm
from calderon.dirac import (
    CollarFunction,
    CollarGrid,
    ProductDiracModel,
    apply_dirac,
    apply_dirac_minus,
    build_double,
    chebyshev_nodes_diff,
    clenshaw_curtis_weights,
    fd4_diff,
    ghost_solution_check,
    green_residual,
    invert_double,
    simpson_weights,
)
from calderon.errors import CertificationError, StructureError

from conftest import cylinder_fixture, fixture_models, hermitian


# -- discretization building blocks ------------------------------------


def test_chebyshev_nodes_ascending_and_exact():
    u, d = chebyshev_nodes_diff(16)
    assert u[0] == 0.0 and u[-1] == pytest.approx(1.0)
    assert np.all(np.diff(u) > 0)
    p = u**7 - 3 * u**2
    assert np.abs(d @ p - (7 * u**6 - 6 * u)).max() < 1e-10


def test_clenshaw_curtis_exactness():
    w = clenshaw_curtis_weights(16)
    u = chebyshev_nodes_diff(16)[0]
    assert w @ np.ones_like(u) == pytest.approx(1.0, abs=1e-14)
    assert w @ u**6 == pytest.approx(1.0 / 7.0, abs=1e-14)


def test_fd4_order():
    errs = []
    for n in (16, 32, 64):
        u = np.linspace(0.0, 1.0, n + 1)
        d = fd4_diff(n, 1.0 / n)
        f = np.exp(np.sin(2 * np.pi * u))
        df = 2 * np.pi * np.cos(2 * np.pi * u) * f
        errs.append(np.abs(d @ f - df).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.mean() > 3.5


def test_simpson_exactness():
    w = simpson_weights(16, 1.0 / 16)
    u = np.linspace(0, 1, 17)
    assert w @ u**3 == pytest.approx(0.25, abs=1e-14)


# -- model structure ----------------------------------------------------


def test_model_clifford_relations(rng):
    model, _ = cylinder_fixture()
    g = model.g_rep
    b = model.tangential_matrix(1.5)
    assert np.linalg.norm(g @ g.conj().T - np.eye(4), 2) < 1e-14
    assert np.linalg.norm(g + g.conj().T, 2) < 1e-14
    assert np.linalg.norm(g @ b + b @ g, 2) < 1e-12
    assert np.linalg.norm(b - b.conj().T, 2) < 1e-12


def test_model_validation(rng):
    alg = CStarAlgebra.matrix(2)
    with pytest.raises(StructureError):
        ProductDiracModel("plane", alg)
    with pytest.raises(StructureError):
        ProductDiracModel(
            "cylinder", alg, v=np.array([[0.0, 1.0], [0.0, 0.0]])
        )  # not self-adjoint
    with pytest.raises(StructureError):
        ProductDiracModel(
            "cylinder",
            alg,
            v=np.zeros((2, 2)),
            holonomy=np.diag([2.0, 1.0]),
        )  # not unitary
    with pytest.raises(StructureError):
        ProductDiracModel(
            "cylinder",
            alg,
            v=np.diag([1.0, 2.0]),
            holonomy=np.array([[0.0, 1.0], [1.0, 0.0]]),
        )  # does not commute with v


def test_mode_channels_dealiased():
    model, _ = cylinder_fixture()
    chans = model.mode_channels(12)
    etas = sorted(ch.eta for ch in chans)
    assert etas == [float(k) for k in range(-4, 5)]


def test_holonomy_channels_shift_frequencies():
    alg = CStarAlgebra.cyclic(4)
    h = alg._group_basis[1].astype(complex)
    model = ProductDiracModel(
        "cylinder", alg, v=np.zeros((4, 4)), holonomy=h
    )
    shifts = sorted({round(c.shift, 9) for c in model.mode_channels(12)})
    assert shifts == [0.0, 0.25, 0.5, 0.75]


# -- applying the operator ---------------------------------------------


def test_apply_dirac_matches_symbol(rng):
    model, grid = cylinder_fixture()
    u = grid.u_nodes()
    y = 2 * np.pi * np.arange(grid.n_y) / grid.n_y
    eta = 3
    w = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    p = np.cos(np.pi * u / 2)
    dp = -np.pi / 2 * np.sin(np.pi * u / 2)
    phase = np.exp(1j * eta * y)
    s = CollarFunction(
        grid,
        p[:, None, None, None] * phase[None, :, None, None] * w[None, None],
    )
    b = model.tangential_matrix(eta)
    expect = np.einsum(
        "ij,uyjm->uyim",
        model.g_rep,
        (dp[:, None, None, None] * w[None, None]
         + p[:, None, None, None] * (b @ w)[None, None])
        * phase[None, :, None, None],
    )
    got = apply_dirac(model, s, side=1)
    assert np.abs(got.values - expect).max() < 1e-11


def test_interior_adjointness(rng):
    model, grid = cylinder_fixture()
    u = grid.u_nodes()
    y = 2 * np.pi * np.arange(grid.n_y) / grid.n_y
    prof = u**2 * (1 - u) ** 2
    c1 = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    c2 = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    mk = lambda c: CollarFunction(
        grid,
        prof[:, None, None, None]
        * np.exp(1j * y)[None, :, None, None]
        * c[None, None],
    )
    s1, s2 = mk(c1), mk(c2)
    from calderon.dirac import collar_inner_product

    lhs = collar_inner_product(apply_dirac(model, s1, 1), s2)
    rhs = collar_inner_product(s1, apply_dirac_minus(model, s2))
    assert np.linalg.norm(lhs - rhs, 2) < 1e-12


def _exponential_pair(model, grid, rng, eta=2):
    """Side-1 kernel element and a generic exponential E^- section."""
    u = grid.u_nodes()
    y = (
        2 * np.pi * np.arange(grid.n_y) / grid.n_y
        if grid.n_y > 1
        else np.zeros(1)
    )
    b = model.tangential_matrix(eta if grid.n_y > 1 else 0.0)
    n_f, m = model.n_fiber, model.m
    a = rng.standard_normal((n_f, m)) + 1j * rng.standard_normal((n_f, m))
    c = rng.standard_normal((n_f, m)) + 1j * rng.standard_normal((n_f, m))
    phase = np.exp(1j * (eta if grid.n_y > 1 else 0) * y)
    e_minus = np.stack([scipy.linalg.expm(-uu * b) for uu in u])
    e_plus = np.stack([scipy.linalg.expm(uu * b) for uu in u])
    s1 = CollarFunction(
        grid,
        np.einsum("uij,jm->uim", e_minus, a)[:, None]
        * phase[None, :, None, None],
    )
    s2 = CollarFunction(
        grid,
        np.einsum("uij,jm->uim", e_plus, c)[:, None]
        * phase[None, :, None, None],
    )
    return s1, s2


def test_green_formula_exponential_solutions(rng):
    for name, model, grid in fixture_models():
        if model.h_rep is not None:
            continue
        s1, s2 = _exponential_pair(model, grid, rng)
        res = alg_norm(green_residual(model, s1, s2))
        scale = max(1.0, s1.norm() * s2.norm())
        assert res < 1e-12 * scale, name


def test_green_formula_dense_convergence(rng):
    model, _ = cylinder_fixture()
    errs = []
    for n_u in (16, 32, 64):
        grid = CollarGrid(n_u=n_u, n_y=12, kind="uniform")
        s1, s2 = _exponential_pair(model, grid, np.random.default_rng(5))
        errs.append(alg_norm(green_residual(model, s1, s2)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() > 3.5


# -- the double ---------------------------------------------------------


def test_double_certificates():
    for name, model, grid in fixture_models():
        sysd = build_double(model, grid)
        assert sysd.sigma_min > 1e-10, name
        assert max(sysd.kernel_dims()) == 0, name
        ghost = ghost_solution_check(sysd)
        assert ghost["trivial_kernel"], name


def test_double_rejects_near_singular():
    # transmission with periodic (instead of antiperiodic) matching has the
    # constant section in its kernel; emulate by a zero-potential segment
    # whose exact matching matrix is still invertible -- so instead check
    # the error path via an absurd tolerance
    model, grid = cylinder_fixture()
    import calderon.dirac as dirac_mod

    old = dirac_mod.DOUBLE_CERT_TOL
    dirac_mod.DOUBLE_CERT_TOL = 1e3
    try:
        with pytest.raises(CertificationError):
            build_double(model, grid)
    finally:
        dirac_mod.DOUBLE_CERT_TOL = old


def test_invert_double_analytic_exact(rng):
    model, grid = cylinder_fixture()
    u = grid.u_nodes()
    y = 2 * np.pi * np.arange(grid.n_y) / grid.n_y
    eta = 1
    b = model.tangential_matrix(eta)
    w = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    p = np.cos(np.pi * u / 2)
    dp = -np.pi / 2 * np.sin(np.pi * u / 2)
    phase = np.exp(1j * eta * y)

    def field(prof):
        return prof[:, None, None, None] * phase[None, :, None, None] * w[None, None]

    phi_ex = field(p)
    f1 = CollarFunction(
        grid,
        np.einsum(
            "ij,uyjm->uyim",
            model.g_rep,
            field(dp) + np.einsum("ij,uyjm->uyim", b, phi_ex),
        ),
    )
    f2 = CollarFunction(
        grid, -field(dp) + np.einsum("ij,uyjm->uyim", b, phi_ex)
    )
    sysd = build_double(model, grid)
    phi, tau = invert_double(sysd, f1, f2)
    assert np.abs(phi.values - phi_ex).max() < 1e-12
    assert np.abs(tau.values - phi_ex).max() < 1e-12


def test_invert_double_dense_y_dependent_order():
    alg = CStarAlgebra.matrix(2)
    base = np.diag([0.9, -0.4]).astype(complex)
    model = ProductDiracModel(
        "cylinder", alg, v=lambda y: base + 0.3 * np.cos(y) * np.eye(2)
    )
    w = (np.arange(8).reshape(4, 2) + 1.0).astype(complex)
    errs = []
    for n_u in (8, 16, 32):
        grid = CollarGrid(n_u=n_u, n_y=8, kind="uniform")
        u = grid.u_nodes()
        y = 2 * np.pi * np.arange(8) / 8
        p = np.cos(np.pi * u / 2)
        dp = -np.pi / 2 * np.sin(np.pi * u / 2)
        phase = np.exp(1j * y)
        phi_ex = (
            p[:, None, None, None] * phase[None, :, None, None] * w[None, None]
        )
        s = CollarFunction(grid, phi_ex)
        f1 = apply_dirac(model, s, side=1)
        dphi = (
            dp[:, None, None, None] * phase[None, :, None, None] * w[None, None]
        )
        f2_vals = f1.values.copy()
        # f2 = (-d/du + B) phi = f1 pulled back minus twice the derivative
        g_star = model.g_rep.conj().T
        f2_vals = np.einsum("ij,uyjm->uyim", g_star, f1.values) - 2 * dphi
        f2 = CollarFunction(grid, f2_vals)
        sysd = build_double(model, grid)
        phi, tau = invert_double(sysd, f1, f2)
        errs.append(
            max(
                np.abs(phi.values - phi_ex).max(),
                np.abs(tau.values - phi_ex).max(),
            )
        )
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() > 3.5


def test_sigma_min_stable_under_refinement():
    model, _ = cylinder_fixture()
    sig = []
    for n_u in (32, 64):
        grid = CollarGrid(n_u=n_u, n_y=12, kind="uniform")
        sig.append(build_double(model, grid).sigma_min)
    assert abs(sig[1] - sig[0]) / sig[0] < 0.20


def test_invert_double_rejects_holonomy(rng):
    alg = CStarAlgebra.matrix(2)
    model = ProductDiracModel(
        "cylinder",
        alg,
        v=np.zeros((2, 2)),
        holonomy=-np.eye(2, dtype=complex),
    )
    grid = CollarGrid(n_u=16, n_y=12, kind="chebyshev")
    sysd = build_double(model, grid)
    f = CollarFunction(grid, np.zeros((17, 12, 4, 2), dtype=complex))
    with pytest.raises(StructureError):
        invert_double(sysd, f)
