import numpy as np
import pytest

from calderon import hilbmod
from calderon.csalg import is_positive, star
from calderon.errors import CertificationError, StructureError
from calderon.hilbmod import (
    ModuleOperator,
    ModuleVector,
    adjoint,
    closed_range_gap,
    inner_product,
    membership_defect,
    mishchenko_decompose,
    orthogonalize_idempotent,
    principal_angles,
    rank_one,
    relative_index,
    vector_from_column,
)


def test_inner_product_axioms(algebra, rng):
    for _ in range(30):
        x = ModuleVector.random(algebra, 3, rng)
        y = ModuleVector.random(algebra, 3, rng)
        z = ModuleVector.random(algebra, 3, rng)
        a = algebra.random_element(rng)
        # additivity and right A-linearity in the second slot
        d1 = inner_product(x, y + z) - inner_product(x, y) - inner_product(x, z)
        d2 = inner_product(x, y.times(a)) - inner_product(x, y) * a
        # symmetry under the involution
        d3 = inner_product(x, y) - star(inner_product(y, x))
        for d in (d1, d2, d3):
            assert np.linalg.norm(d.mat, 2) < 1e-12 * max(
                1.0, x.norm() * (y.norm() + z.norm()) * (1 + np.linalg.norm(a.mat))
            )
        # positivity
        assert is_positive(inner_product(x, x))


def test_norm_definiteness(algebra, rng):
    x = ModuleVector.random(algebra, 2, rng)
    assert x.norm() > 0
    zero = ModuleVector(algebra, 2, np.zeros_like(x.stack))
    assert zero.norm() == 0.0


def test_theta_identities(algebra, rng):
    for _ in range(20):
        x = ModuleVector.random(algebra, 3, rng)
        y = ModuleVector.random(algebra, 2, rng)
        u = ModuleVector.random(algebra, 2, rng)
        v = ModuleVector.random(algebra, 4, rng)
        z = ModuleVector.random(algebra, 4, rng)
        th_xy = rank_one(x, y)
        assert (
            np.linalg.norm((adjoint(th_xy) - rank_one(y, x)).rep, 2) < 1e-12
        )
        # theta_{x,y} theta_{u,v} = theta_{x <y,u>, v}
        lhs = th_xy.compose(rank_one(u, v))
        rhs = rank_one(x.times(inner_product(y, u)), v)
        scale = max(1.0, lhs.norm())
        assert np.linalg.norm((lhs - rhs).rep, 2) < 1e-11 * scale
        # action on a vector
        dv = lhs.apply(z).stack - x.times(
            inner_product(y, u) * inner_product(v, z)
        ).stack
        assert np.linalg.norm(dv, 2) < 1e-10 * max(1.0, scale * z.norm())


def test_adjoint_identity(algebra, rng):
    for _ in range(20):
        t = ModuleOperator.random(algebra, 3, 2, rng)
        x = ModuleVector.random(algebra, 3, rng)
        y = ModuleVector.random(algebra, 2, rng)
        d = inner_product(t.apply(x), y) - inner_product(x, adjoint(t).apply(y))
        assert np.linalg.norm(d.mat, 2) < 1e-11 * max(
            1.0, t.norm() * x.norm() * y.norm()
        )


def test_operator_entries_in_algebra(algebra, rng):
    t = ModuleOperator.random(algebra, 2, 3, rng)
    assert membership_defect(algebra, t.rep) < 1e-10


def test_vector_from_column_is_invariant(algebra, rng):
    """Generators built from complex columns stay inside invariant subspaces."""
    t = ModuleOperator.random(algebra, 3, 3, rng)
    u, s, vh = np.linalg.svd(t.rep)
    r = int(np.sum(s > 1e-9 * s[0]))
    for j in range(min(2, r)):
        gen = vector_from_column(algebra, 3, u[:, j])
        # each stack column must lie in the range of t.rep
        resid = gen.stack - u[:, :r] @ (u[:, :r].conj().T @ gen.stack)
        assert np.linalg.norm(resid, 2) < 1e-9 * max(
            1.0, np.linalg.norm(gen.stack, 2)
        )


def _rank_deficient(algebra, rng, source=3, target=3, rank=2):
    diag = np.zeros((target, source))
    for i in range(rank):
        diag[i, i] = 1.0 + rng.random()
    mid = ModuleOperator.from_complex(algebra, diag)
    left = ModuleOperator.random(algebra, target, target, rng)
    right = ModuleOperator.random(algebra, source, source, rng)
    return left.compose(mid).compose(right)


def test_closed_range_gap(algebra, rng):
    t = _rank_deficient(algebra, rng)
    report = closed_range_gap(t)
    assert report.closed
    assert report.gap > 0
    assert report.gap_adjoint == pytest.approx(report.gap, rel=1e-8)
    zero = ModuleOperator(
        algebra, 2, 2, np.zeros((2 * algebra.rep_dim,) * 2)
    )
    assert closed_range_gap(zero).gap == 0.0


def test_mishchenko_decomposition(algebra, rng):
    for _ in range(10):
        t = _rank_deficient(algebra, rng)
        dec = mishchenko_decompose(t)
        m = algebra.rep_dim
        assert len(dec.ker_basis) + len(dec.ran_adj_basis) == 3 * m
        assert len(dec.ker_adj_basis) + len(dec.ran_basis) == 3 * m
        for key in (
            "ker_vs_ran_adj",
            "ker_adj_vs_ran",
            "source_completeness",
            "target_completeness",
        ):
            assert dec.residuals[key] < 1e-10


def _random_projection(dim, rank, rng):
    mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, _ = np.linalg.qr(mat)
    return q[:, :rank] @ q[:, :rank].conj().T


def _skewed_idempotent(algebra, rank, rng, cond_max=100.0):
    m = algebra.rep_dim
    dim = rank * m
    p = _random_projection(dim, dim // 2, rng)
    while True:
        s = np.eye(dim) + 0.4 * (
            rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        ) / np.sqrt(dim)
        if np.linalg.cond(s) <= cond_max:
            break
    c = s @ p @ np.linalg.inv(s)
    return ModuleOperator(algebra, rank, rank, c), p


def test_orthogonalize_idempotent(algebra, rng):
    for _ in range(10):
        c, _ = _skewed_idempotent(algebra, 2, rng)
        orth, report = orthogonalize_idempotent(c, with_report=True)
        rep = orth.rep
        assert np.linalg.norm(rep @ rep - rep, 2) < 1e-10
        assert np.linalg.norm(rep - rep.conj().T, 2) < 1e-10
        angles = principal_angles(rep, c.rep)
        assert angles.size == 0 or angles.max() < 1e-8
        assert report["f_min_eigenvalue"] > 0
        # fixed point on orthogonal projections
        again = orthogonalize_idempotent(orth)
        assert np.linalg.norm(again.rep - rep, 2) < 1e-12


def test_orthogonalize_rejects_non_idempotent(algebra, rng):
    t = ModuleOperator.random(algebra, 2, 2, rng)
    with pytest.raises((StructureError, CertificationError)):
        orthogonalize_idempotent(t)


def test_relative_index(algebra, rng):
    m = algebra.rep_dim
    dim = 2 * m
    p = ModuleOperator(algebra, 2, 2, _random_projection(dim, m, rng))
    q = ModuleOperator(algebra, 2, 2, _random_projection(dim, m + 1, rng))
    assert relative_index(p, p) == 0
    assert relative_index(p, q) == -1
    assert relative_index(q, p) == 1


def test_module_shapes_rejected(algebra, rng):
    x = ModuleVector.random(algebra, 2, rng)
    y = ModuleVector.random(algebra, 3, rng)
    with pytest.raises(StructureError):
        inner_product(x, y)
    t = ModuleOperator.random(algebra, 3, 2, rng)
    with pytest.raises(StructureError):
        t.apply(x)
