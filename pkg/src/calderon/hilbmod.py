"""Hilbert A-module linear algebra over the algebras of :mod:`calderon.csalg`.

Free modules A^k are realized concretely: a module vector is a k-tuple of
algebra elements, stored as a stacked (k*m) x m complex matrix (m the
representation dimension), and an adjointable operator A^k -> A^l is an
l x k array of algebra elements acting by block matrix multiplication.
Right A-action is multiplication on the representation columns, so module
kernels and ranges reduce to column-space computations on the representing
complex matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .csalg import AlgebraElement
from .errors import CertificationError, StructureError

#: relative singular-value threshold for numerical rank decisions
RANK_RTOL = 1e-9


class ModuleVector:
    """Element of the free Hilbert module A^k.

    ``stack`` has shape (k*m, m): the representing matrices of the k
    coordinates, stacked vertically.
    """

    __slots__ = ("algebra", "rank", "stack")

    def __init__(self, algebra, rank, stack):
        self.algebra = algebra
        self.rank = int(rank)
        stack = np.asarray(stack, dtype=complex)
        m = algebra.rep_dim
        if stack.shape != (self.rank * m, m):
            raise StructureError("stack shape does not match rank/algebra")
        self.stack = stack

    @classmethod
    def from_entries(cls, entries):
        """Build from a sequence of AlgebraElements."""
        if not entries:
            raise StructureError("empty module vector")
        alg = entries[0].algebra
        for e in entries:
            if e.algebra != alg:
                raise StructureError("algebra mismatch among entries")
        return cls(alg, len(entries), np.vstack([e.mat for e in entries]))

    @classmethod
    def from_complex(cls, algebra, vec):
        """Embed a complex k-vector as (v_1 1_A, ..., v_k 1_A)."""
        vec = np.asarray(vec, dtype=complex).ravel()
        m = algebra.rep_dim
        return cls(algebra, vec.size, np.kron(vec[:, None], np.eye(m)))

    @classmethod
    def random(cls, algebra, rank, rng, scale=1.0):
        return cls.from_entries(
            [algebra.random_element(rng, scale) for _ in range(rank)]
        )

    def entry(self, i):
        m = self.algebra.rep_dim
        return AlgebraElement(self.algebra, self.stack[i * m : (i + 1) * m])

    def entries(self):
        return [self.entry(i) for i in range(self.rank)]

    def times(self, a):
        """Right action x . a."""
        if a.algebra != self.algebra:
            raise StructureError("algebra mismatch")
        return ModuleVector(self.algebra, self.rank, self.stack @ a.mat)

    def __add__(self, other):
        self._compat(other)
        return ModuleVector(self.algebra, self.rank, self.stack + other.stack)

    def __sub__(self, other):
        self._compat(other)
        return ModuleVector(self.algebra, self.rank, self.stack - other.stack)

    def __rmul__(self, scalar):
        return ModuleVector(self.algebra, self.rank, complex(scalar) * self.stack)

    def norm(self):
        """Hilbert-module norm ||<x,x>_A||^(1/2)."""
        g = self.stack.conj().T @ self.stack
        return float(np.sqrt(np.linalg.norm(g, 2)))

    def _compat(self, other):
        if self.algebra != other.algebra or self.rank != other.rank:
            raise StructureError("rank/algebra mismatch")

    def __repr__(self):
        return "ModuleVector(rank=%d, %r)" % (self.rank, self.algebra)


class ModuleOperator:
    """Adjointable operator A^k -> A^l given by an l x k matrix over A.

    ``rep`` is the representing (l*m) x (k*m) complex matrix; it acts on the
    stacked representation of a module vector by left multiplication, which
    commutes with the right A-action on columns.  In these free modules
    every matrix over A is adjointable, the adjoint being the entrywise
    starred transpose.
    """

    __slots__ = ("algebra", "source_rank", "target_rank", "rep")

    def __init__(self, algebra, source_rank, target_rank, rep, check=False):
        self.algebra = algebra
        self.source_rank = int(source_rank)
        self.target_rank = int(target_rank)
        rep = np.asarray(rep, dtype=complex)
        m = algebra.rep_dim
        if rep.shape != (self.target_rank * m, self.source_rank * m):
            raise StructureError("rep shape does not match ranks/algebra")
        if check and algebra.kind == "group":
            defect = membership_defect(algebra, rep)
            if defect > 1e-8 * max(1.0, np.linalg.norm(rep, 2)):
                raise StructureError("operator entries not in the algebra")
        self.rep = rep

    @classmethod
    def from_entries(cls, entries):
        """Build from an l x k nested sequence of AlgebraElements."""
        rows = [list(r) for r in entries]
        alg = rows[0][0].algebra
        rep = np.block([[e.mat for e in row] for row in rows])
        return cls(alg, len(rows[0]), len(rows), rep)

    @classmethod
    def from_complex(cls, algebra, mat):
        """Embed a complex l x k matrix entrywise as multiples of 1_A."""
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        m = algebra.rep_dim
        return cls(algebra, mat.shape[1], mat.shape[0], np.kron(mat, np.eye(m)))

    @classmethod
    def identity(cls, algebra, rank):
        m = algebra.rep_dim
        return cls(algebra, rank, rank, np.eye(rank * m, dtype=complex))

    @classmethod
    def random(cls, algebra, source_rank, target_rank, rng, scale=1.0):
        return cls.from_entries(
            [
                [algebra.random_element(rng, scale) for _ in range(source_rank)]
                for _ in range(target_rank)
            ]
        )

    def entry(self, i, j):
        m = self.algebra.rep_dim
        block = self.rep[i * m : (i + 1) * m, j * m : (j + 1) * m]
        if self.algebra.kind == "group":
            block = self.algebra.project_matrix(block)
        return AlgebraElement(self.algebra, block)

    def apply(self, x):
        if x.algebra != self.algebra or x.rank != self.source_rank:
            raise StructureError("rank/algebra mismatch")
        return ModuleVector(self.algebra, self.target_rank, self.rep @ x.stack)

    def compose(self, other):
        if (
            other.algebra != self.algebra
            or other.target_rank != self.source_rank
        ):
            raise StructureError("rank/algebra mismatch in composition")
        return ModuleOperator(
            self.algebra,
            other.source_rank,
            self.target_rank,
            self.rep @ other.rep,
        )

    def __add__(self, other):
        self._same_shape(other)
        return ModuleOperator(
            self.algebra, self.source_rank, self.target_rank, self.rep + other.rep
        )

    def __sub__(self, other):
        self._same_shape(other)
        return ModuleOperator(
            self.algebra, self.source_rank, self.target_rank, self.rep - other.rep
        )

    def __rmul__(self, scalar):
        return ModuleOperator(
            self.algebra,
            self.source_rank,
            self.target_rank,
            complex(scalar) * self.rep,
        )

    def norm(self):
        return float(np.linalg.norm(self.rep, 2))

    def _same_shape(self, other):
        if (
            other.algebra != self.algebra
            or other.source_rank != self.source_rank
            or other.target_rank != self.target_rank
        ):
            raise StructureError("shape/algebra mismatch")

    def __repr__(self):
        return "ModuleOperator(A^%d -> A^%d, %r)" % (
            self.source_rank,
            self.target_rank,
            self.algebra,
        )


def membership_defect(algebra, rep):
    """Max distance of the m x m blocks of ``rep`` from the algebra span."""
    m = algebra.rep_dim
    l = rep.shape[0] // m
    k = rep.shape[1] // m
    worst = 0.0
    for i in range(l):
        for j in range(k):
            block = rep[i * m : (i + 1) * m, j * m : (j + 1) * m]
            worst = max(worst, algebra.membership_defect(block))
    return worst


# -- basic operations ---------------------------------------------------


def inner_product(x, y):
    """A-valued inner product <x, y> = sum_i x_i^* y_i."""
    x._compat(y)
    return AlgebraElement(x.algebra, x.stack.conj().T @ y.stack)


def rank_one(x, y):
    """The rank-one operator z -> x <y, z>."""
    if x.algebra != y.algebra:
        raise StructureError("algebra mismatch")
    return ModuleOperator(
        x.algebra, y.rank, x.rank, x.stack @ y.stack.conj().T
    )


def adjoint(T):
    """Entrywise-starred transpose; satisfies <u, Tv> = <T* u, v>."""
    return ModuleOperator(
        T.algebra, T.target_rank, T.source_rank, T.rep.conj().T
    )


# -- closed range and the Mishchenko decomposition ----------------------


@dataclass
class ClosedRangeReport:
    gap: float
    closed: bool
    gap_adjoint: float


def closed_range_gap(T, gap_tol=1e-9):
    """Spectral gap of T*T above zero, certifying closed range.

    ``gap`` is the smallest nonzero eigenvalue of T*T in the representation
    (0 for the zero operator); zero eigenvalues are identified with the
    relative threshold RANK_RTOL.  The same gap computed from TT* is
    reported as a finite-dimensional check of the closed-range lemma.
    """
    if gap_tol <= 0:
        raise StructureError("gap_tol must be > 0")
    s = np.linalg.svd(T.rep, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return ClosedRangeReport(gap=0.0, closed=True, gap_adjoint=0.0)
    nonzero = s[s > RANK_RTOL * s[0]]
    if nonzero.size == 0:
        return ClosedRangeReport(gap=0.0, closed=True, gap_adjoint=0.0)
    gap = float(nonzero[-1] ** 2)
    # T*T and TT* share nonzero spectrum; at finite dimension the check is
    # exact up to eigensolver noise.
    s_adj = np.linalg.svd(T.rep.conj().T, compute_uv=False)
    gap_adj = float(s_adj[s_adj > RANK_RTOL * s_adj[0]][-1] ** 2)
    return ClosedRangeReport(
        gap=gap, closed=bool(gap >= gap_tol), gap_adjoint=gap_adj
    )


@dataclass
class MishchenkoDecomposition:
    """Generating sets certifying M = Ker T (+) Ran T*, N = Ker T* (+) Ran T."""

    ker_basis: list
    ran_basis: list
    ker_adj_basis: list
    ran_adj_basis: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)


def vector_from_column(algebra, rank, v):
    """Module vector whose representation columns span the A-orbit of ``v``.

    For a group algebra the i-th entry is the element with coefficient
    vector v_i, so the columns of the stack are the right-translates of
    ``v`` -- these stay inside any subspace that is invariant under the
    operators of M_rank(A), in particular inside kernels and ranges.
    For a matrix algebra the entry simply carries v_i in its first column.
    """
    m = algebra.rep_dim
    v = np.asarray(v, dtype=complex).reshape(rank, m)
    mats = []
    for i in range(rank):
        if algebra.kind == "group":
            mats.append(
                np.einsum("h,hrc->rc", v[i], algebra._group_basis).astype(
                    complex
                )
            )
        else:
            mat = np.zeros((m, m), dtype=complex)
            mat[:, 0] = v[i]
            mats.append(mat)
    return ModuleVector(algebra, rank, np.vstack(mats))


def _complex_to_generators(algebra, rank, vectors):
    """One module generator per column of a complex matrix."""
    return [
        vector_from_column(algebra, rank, vectors[:, j])
        for j in range(vectors.shape[1])
    ]


def mishchenko_decompose(T, gap_tol=1e-9):
    """Orthogonal decomposition for an operator with certified closed range.

    The kernel and range of T as a module map are the column spaces of the
    representing matrix (the right A-action mixes representation columns
    only), so generating sets are built from a complex SVD and certified:
    cross-orthogonality of the summands and reconstruction of every ambient
    basis vector, both below 1e-10.
    """
    report = closed_range_gap(T, gap_tol)
    if not report.closed:
        raise CertificationError(
            "range not certifiably closed (gap %.3e < %.3e)"
            % (report.gap, gap_tol)
        )
    u, s, vh = np.linalg.svd(T.rep)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
    alg = T.algebra
    ran = _complex_to_generators(alg, T.target_rank, u[:, :rank])
    ker_adj = _complex_to_generators(alg, T.target_rank, u[:, rank:])
    ran_adj = _complex_to_generators(alg, T.source_rank, vh[:rank].conj().T)
    ker = _complex_to_generators(alg, T.source_rank, vh[rank:].conj().T)

    def cross(gens_a, gens_b):
        worst = 0.0
        for xa in gens_a:
            for xb in gens_b:
                worst = max(worst, np.linalg.norm(inner_product(xa, xb).mat, 2))
        return worst

    def completeness(cols_a, cols_b, dim):
        # the SVD factors are unitary: the two families together must
        # reconstruct every ambient representation basis vector
        basis = np.hstack([cols_a, cols_b])
        proj = basis @ basis.conj().T
        return float(np.linalg.norm(proj - np.eye(dim), 2))

    m = alg.rep_dim
    residuals = {
        "ker_vs_ran_adj": cross(ker, ran_adj),
        "ker_adj_vs_ran": cross(ker_adj, ran),
        "source_completeness": completeness(
            vh[rank:].conj().T, vh[:rank].conj().T, T.source_rank * m
        ),
        "target_completeness": completeness(
            u[:, rank:], u[:, :rank], T.target_rank * m
        ),
        "gap": report.gap,
    }
    return MishchenkoDecomposition(
        ker_basis=ker,
        ran_basis=ran,
        ker_adj_basis=ker_adj,
        ran_adj_basis=ran_adj,
        residuals=residuals,
    )


# -- idempotent orthogonalization and relative index --------------------


def orthogonalize_idempotent(C, idem_tol=1e-8, with_report=False):
    """Orthogonal projection with the same range as the idempotent C.

    Computes F = C C* + (1 - C*)(1 - C) and returns C C* F^{-1}.  F is
    certified invertible (its smallest eigenvalue is returned in the
    optional report); singular F signals that C was not an idempotent.
    """
    if C.source_rank != C.target_rank:
        raise StructureError("idempotent must be square")
    rep = C.rep
    dim = rep.shape[0]
    eye = np.eye(dim)
    idem_defect = np.linalg.norm(rep @ rep - rep, 2)
    if idem_defect > idem_tol * max(1.0, np.linalg.norm(rep, 2) ** 2):
        raise StructureError(
            "operator is not idempotent within tolerance (defect %.3e)"
            % idem_defect
        )
    f = rep @ rep.conj().T + (eye - rep.conj().T) @ (eye - rep)
    f_eigs = np.linalg.eigvalsh(0.5 * (f + f.conj().T))
    if f_eigs.min() < 1e-12 * max(1.0, f_eigs.max()):
        raise CertificationError(
            "F numerically singular (min eigenvalue %.3e); "
            "input was not an idempotent" % f_eigs.min()
        )
    orth = np.linalg.solve(f.conj().T, (rep @ rep.conj().T).conj().T).conj().T
    out = ModuleOperator(C.algebra, C.source_rank, C.target_rank, orth)
    if with_report:
        return out, {"f_min_eigenvalue": float(f_eigs.min())}
    return out


def _check_projection(P, tol):
    rep = P.rep
    if P.source_rank != P.target_rank:
        raise StructureError("projection must be square")
    scale = max(1.0, np.linalg.norm(rep, 2))
    if np.linalg.norm(rep @ rep - rep, 2) > tol * scale**2:
        raise StructureError("operator is not idempotent within tolerance")
    if np.linalg.norm(rep - rep.conj().T, 2) > tol * scale:
        raise StructureError("operator is not self-adjoint within tolerance")


def _rank(mat):
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def relative_index(P, Q, tol=1e-10):
    """Relative index of two orthogonal projections (experimental).

    Returns dim ker(QP: ran P -> ran Q) - dim ker(PQ: ran Q -> ran P) with
    dimensions counted over C in the representation.  Valued in Z rather
    than K_0(A); for group algebras this forgets the module structure.
    """
    _check_projection(P, tol)
    _check_projection(Q, tol)
    if P.rep.shape != Q.rep.shape:
        raise StructureError("projections act on different modules")
    rank_p = _rank(P.rep)
    rank_q = _rank(Q.rep)
    rank_qp = _rank(Q.rep @ P.rep)
    rank_pq = _rank(P.rep @ Q.rep)
    return (rank_p - rank_qp) - (rank_q - rank_pq)


def principal_angles(rep_a, rep_b):
    """Principal angles between the column ranges of two matrices."""
    qa = scipy.linalg.orth(rep_a)
    qb = scipy.linalg.orth(rep_b)
    if qa.shape[1] != qb.shape[1]:
        raise StructureError("ranges have different dimensions")
    if qa.shape[1] == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(qa, qb)
