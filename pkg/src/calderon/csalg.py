"""Finite-dimensional C*-algebras in a fixed faithful matrix representation.

Two families are supported: full matrix algebras M_n(C) and group algebras
C[G] of finite groups given by a Cayley table, represented faithfully by the
left regular representation.  Every element is stored as its representing
complex matrix, so *, norm, spectrum and positivity are all concrete
numerical linear algebra.
"""

from __future__ import annotations

import numpy as np

from .errors import SpectrumError, StructureError

_MAX_MATRIX_N = 8
_MAX_GROUP_ORDER = 24


def cyclic_table(n):
    """Cayley table of Z/n (entry [i][j] = i+j mod n, identity = 0)."""
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def symmetric_table(n):
    """Cayley table of the symmetric group S_n (identity at index 0)."""
    from itertools import permutations

    perms = sorted(permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    # composition (p*q)(x) = p(q(x))
    table = [
        [index[tuple(p[q[x]] for x in range(n))] for q in perms] for p in perms
    ]
    return table


class CStarAlgebra:
    """A matrix algebra M_n(C) or a finite group algebra C[G].

    The algebra carries a fixed faithful *-representation: the identity
    representation for M_n(C), the left regular representation for C[G].
    ``rep_dim`` is the dimension of that representation.
    """

    def __init__(self, kind, n=None, table=None):
        if kind == "matrix":
            if n is None or n < 1 or n > _MAX_MATRIX_N:
                raise StructureError(
                    "matrix algebra needs 1 <= n <= %d" % _MAX_MATRIX_N
                )
            self.kind = "matrix"
            self.n = int(n)
            self.rep_dim = int(n)
            self._group_basis = None
        elif kind == "group":
            if table is None:
                raise StructureError("group algebra needs a Cayley table")
            table = [list(row) for row in table]
            order = len(table)
            if order < 1 or order > _MAX_GROUP_ORDER:
                raise StructureError(
                    "group order must be between 1 and %d" % _MAX_GROUP_ORDER
                )
            _check_cayley_table(table)
            self.kind = "group"
            self.table = table
            self.order = order
            self.rep_dim = order
            self._group_basis = self._regular_representation()
        else:
            raise StructureError("unknown algebra kind %r" % (kind,))

    # -- constructors --------------------------------------------------

    @classmethod
    def matrix(cls, n):
        return cls("matrix", n=n)

    @classmethod
    def group(cls, table):
        return cls("group", table=table)

    @classmethod
    def cyclic(cls, n):
        return cls.group(cyclic_table(n))

    @classmethod
    def symmetric(cls, n):
        return cls.group(symmetric_table(n))

    @classmethod
    def from_descriptor(cls, desc):
        """Build from a serializable descriptor dict.

        Accepted forms: ``{"kind": "matrix", "n": 2}``,
        ``{"kind": "group", "table": [[...]]}``,
        ``{"kind": "group", "name": "cyclic", "n": 4}``,
        ``{"kind": "group", "name": "symmetric", "n": 3}``.
        """
        kind = desc.get("kind")
        if kind == "matrix":
            return cls.matrix(desc["n"])
        if kind == "group":
            if "table" in desc:
                return cls.group(desc["table"])
            name = desc.get("name")
            if name == "cyclic":
                return cls.cyclic(desc["n"])
            if name == "symmetric":
                return cls.symmetric(desc["n"])
            raise StructureError("unknown group descriptor %r" % (desc,))
        raise StructureError("unknown algebra descriptor %r" % (desc,))

    def descriptor(self):
        if self.kind == "matrix":
            return {"kind": "matrix", "n": self.n}
        return {"kind": "group", "table": self.table}

    # -- representation ------------------------------------------------

    def _regular_representation(self):
        """Left regular representation matrices L_g, g in group order."""
        order = self.order
        mats = np.zeros((order, order, order))
        for g in range(order):
            for h in range(order):
                mats[g, self.table[g][h], h] = 1.0
        return mats

    def group_element(self, g):
        """The group element g as an algebra element."""
        if self.kind != "group":
            raise StructureError("group_element on a matrix algebra")
        return AlgebraElement(self, self._group_basis[g])

    def identity(self):
        return AlgebraElement(self, np.eye(self.rep_dim, dtype=complex))

    def zero(self):
        return AlgebraElement(self, np.zeros((self.rep_dim,) * 2, dtype=complex))

    def project_matrix(self, mat):
        """Orthogonal projection of a rep_dim x rep_dim matrix onto the algebra.

        For M_n(C) this is the identity.  For a group algebra the regular
        representation images L_g are Hilbert-Schmidt orthogonal, so the
        projection is a sum of normalized HS inner products.
        """
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (self.rep_dim, self.rep_dim):
            raise StructureError("matrix has wrong shape for this algebra")
        if self.kind == "matrix":
            return mat
        coeff = np.einsum("gij,ij->g", self._group_basis, mat) / self.order
        return np.einsum("g,gij->ij", coeff, self._group_basis)

    def membership_defect(self, mat):
        """Operator-norm distance from ``mat`` to the algebra span."""
        mat = np.asarray(mat, dtype=complex)
        return float(np.linalg.norm(mat - self.project_matrix(mat), 2))

    def element(self, mat, check=True, tol=1e-10):
        """Wrap a representing matrix as an algebra element.

        For group algebras the matrix must lie in the span of the regular
        representation (within ``tol``); it is re-projected to kill rounding.
        """
        mat = np.asarray(mat, dtype=complex)
        if self.kind == "group":
            proj = self.project_matrix(mat)
            if check and np.linalg.norm(mat - proj, 2) > tol * max(
                1.0, np.linalg.norm(mat, 2)
            ):
                raise StructureError(
                    "matrix does not lie in the group-algebra span"
                )
            mat = proj
        return AlgebraElement(self, mat)

    def scalar(self, z):
        return AlgebraElement(self, complex(z) * np.eye(self.rep_dim))

    def random_element(self, rng, scale=1.0):
        """Random element with independent complex Gaussian coordinates."""
        if self.kind == "matrix":
            m = self.rep_dim
            mat = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            return AlgebraElement(self, scale * mat)
        coeff = rng.standard_normal(self.order) + 1j * rng.standard_normal(
            self.order
        )
        mat = np.einsum("g,gij->ij", coeff, self._group_basis)
        return AlgebraElement(self, scale * mat)

    def random_hermitian(self, rng, scale=1.0):
        a = self.random_element(rng, scale)
        return (a + star(a)) * 0.5

    def __eq__(self, other):
        if not isinstance(other, CStarAlgebra):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.kind == "matrix":
            return self.n == other.n
        return self.table == other.table

    def __hash__(self):
        if self.kind == "matrix":
            return hash(("matrix", self.n))
        return hash(("group", tuple(map(tuple, self.table))))

    def __repr__(self):
        if self.kind == "matrix":
            return "CStarAlgebra(M_%d(C))" % self.n
        return "CStarAlgebra(C[G], |G|=%d)" % self.order


def _check_cayley_table(table):
    order = len(table)
    rng_set = set(range(order))
    for row in table:
        if len(row) != order or set(row) != rng_set:
            raise StructureError("Cayley table rows must be permutations")
    for col in zip(*table):
        if set(col) != rng_set:
            raise StructureError("Cayley table columns must be permutations")
    # identity at index 0
    if any(table[0][j] != j or table[j][0] != j for j in range(order)):
        raise StructureError("Cayley table must have identity at index 0")
    # associativity
    for a in range(order):
        for b in range(order):
            for c in range(order):
                if table[table[a][b]][c] != table[a][table[b][c]]:
                    raise StructureError("Cayley table is not associative")


class AlgebraElement:
    """An algebra element stored as its representing matrix."""

    __slots__ = ("algebra", "mat")

    def __init__(self, algebra, mat):
        self.algebra = algebra
        self.mat = np.asarray(mat, dtype=complex)

    def __add__(self, other):
        self._compat(other)
        return AlgebraElement(self.algebra, self.mat + other.mat)

    def __sub__(self, other):
        self._compat(other)
        return AlgebraElement(self.algebra, self.mat - other.mat)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._compat(other)
            return AlgebraElement(self.algebra, self.mat @ other.mat)
        return AlgebraElement(self.algebra, self.mat * complex(other))

    def __rmul__(self, scalar):
        return AlgebraElement(self.algebra, complex(scalar) * self.mat)

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.mat)

    def _compat(self, other):
        if self.algebra != other.algebra:
            raise StructureError("algebra mismatch")

    def __repr__(self):
        return "AlgebraElement(%r,\n%r)" % (self.algebra, self.mat)


def star(a):
    """Involution: conjugate transpose in the representation."""
    return AlgebraElement(a.algebra, a.mat.conj().T)


def norm(a):
    """C*-norm: largest singular value of the representing matrix."""
    return float(np.linalg.norm(a.mat, 2))


def spectrum(a):
    """Eigenvalues of the representing matrix, with multiplicity.

    The representation is faithful, so for group-algebra elements this is
    the C*-spectrum.
    """
    try:
        return np.linalg.eigvals(a.mat)
    except np.linalg.LinAlgError as exc:
        try:
            cond = float(np.linalg.cond(a.mat))
        except Exception:
            cond = None
        raise SpectrumError(
            "eigenvalue solver failed: %s" % exc, cond_estimate=cond
        ) from exc


def is_positive(a, tol=1e-10):
    """True iff ``a`` is Hermitian within ``tol`` with spectrum >= -tol."""
    if tol < 0:
        raise StructureError("tol must be >= 0")
    herm_defect = np.linalg.norm(a.mat - a.mat.conj().T, 2)
    if herm_defect > tol * max(1.0, np.linalg.norm(a.mat, 2)):
        return False
    h = 0.5 * (a.mat + a.mat.conj().T)
    eigs = np.linalg.eigvalsh(h)
    return bool(eigs.min() >= -tol)
