"""Discrete Sobolev modules on the grid torus and half-cylinder.

The double of the model cylinder [0,1] x S^1 is a torus with u-circumference
2 and y-circumference 2*pi; all fractional norms are defined spectrally
there via Fourier multipliers.  Half-domain functions live on u in [0,1]
and reach the torus through the odd reflection extension.

Norm convention: the L^2 norm is the mean square over grid points, so a
single unit-amplitude Fourier mode has ||f||_0 = 1 and ||f||_s =
(1+|xi|^2)^(s/2).  Fiber values are (rows x cols) complex blocks measured
in the Frobenius norm of the representation, which is the convention under
which the discrete Parseval identity is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import StructureError

U_CIRCUMFERENCE = 2.0  # the doubled normal axis
Y_CIRCUMFERENCE = 2.0 * np.pi


@dataclass(frozen=True)
class GridSpec:
    """Grid on the torus (half=False) or the half-domain u in [0,1]."""

    dim: int
    n_u: int
    n_y: int = 1
    half: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise StructureError("dim must be 1 or 2")
        if self.n_u < 8 or self.n_u % 2:
            raise StructureError("n_u must be even and >= 8")
        if self.dim == 2 and (self.n_y < 8 or self.n_y % 2):
            raise StructureError("n_y must be even and >= 8")
        if self.dim == 1 and self.n_y != 1:
            raise StructureError("dim 1 grids have n_y = 1")

    @property
    def du(self):
        return U_CIRCUMFERENCE / self.n_u

    @property
    def dy(self):
        return Y_CIRCUMFERENCE / self.n_y

    @property
    def n_u_points(self):
        """Number of stored u-samples (torus: n_u; half: n_u/2 + 1)."""
        return self.n_u // 2 + 1 if self.half else self.n_u

    def u_nodes(self):
        return self.du * np.arange(self.n_u_points)

    def y_nodes(self):
        return self.dy * np.arange(self.n_y)

    def xi_u(self):
        """u-frequencies on the circumference-2 torus: pi * k."""
        return np.pi * np.fft.fftfreq(self.n_u, d=1.0 / self.n_u)

    def eta(self):
        """Integer y-frequencies."""
        return np.fft.fftfreq(self.n_y, d=1.0 / self.n_y)

    def as_torus(self):
        return GridSpec(self.dim, self.n_u, self.n_y, half=False)

    def as_half(self):
        return GridSpec(self.dim, self.n_u, self.n_y, half=True)


class GridFunction:
    """Sampled section: values of shape (n_u_points, n_y, rows, cols)."""

    __slots__ = ("spec", "values", "algebra")

    def __init__(self, spec, values, algebra=None):
        values = np.asarray(values, dtype=complex)
        if values.ndim == 2:
            values = values[:, :, None, None]
        if values.ndim != 4 or values.shape[:2] != (
            spec.n_u_points,
            spec.n_y,
        ):
            raise StructureError(
                "values shape %r does not match grid" % (values.shape,)
            )
        self.spec = spec
        self.values = values
        self.algebra = algebra

    @property
    def fiber_shape(self):
        return self.values.shape[2:]

    def copy(self, values=None):
        return GridFunction(
            self.spec, self.values.copy() if values is None else values,
            self.algebra,
        )

    def __add__(self, other):
        return GridFunction(self.spec, self.values + other.values, self.algebra)

    def __sub__(self, other):
        return GridFunction(self.spec, self.values - other.values, self.algebra)

    def __rmul__(self, scalar):
        return GridFunction(self.spec, complex(scalar) * self.values, self.algebra)

    def l2_norm(self):
        """Mean-square norm over grid points, Frobenius in the fiber."""
        return float(
            np.sqrt(np.mean(np.sum(np.abs(self.values) ** 2, axis=(2, 3))))
        )

    @classmethod
    def single_mode(cls, spec, k_u, k_y=0, fiber=None, algebra=None):
        """Unit-amplitude Fourier mode exp(i(pi k_u u + k_y y)) * fiber."""
        if spec.half:
            raise StructureError("single modes are torus functions")
        u = spec.u_nodes()[:, None]
        y = spec.y_nodes()[None, :]
        phase = np.exp(1j * (np.pi * k_u * u + k_y * y))
        if fiber is None:
            fiber = np.ones((1, 1), dtype=complex)
        fiber = np.asarray(fiber, dtype=complex)
        return cls(spec, phase[:, :, None, None] * fiber, algebra)

    @classmethod
    def random_band_limited(
        cls, spec, rng, band_u=None, band_y=None, fiber_shape=(1, 1),
        algebra=None,
    ):
        """Random function with modes restricted to |k_u|<=band_u, |k_y|<=band_y."""
        if spec.half:
            raise StructureError("generate on the torus, then restrict")
        if band_u is None:
            band_u = spec.n_u // 4
        if band_y is None:
            band_y = max(spec.n_y // 4, 0) if spec.dim == 2 else 0
        coeffs = np.zeros(
            (spec.n_u, spec.n_y) + tuple(fiber_shape), dtype=complex
        )
        ku = np.fft.fftfreq(spec.n_u, d=1.0 / spec.n_u)
        ky = np.fft.fftfreq(spec.n_y, d=1.0 / spec.n_y)
        mask = (np.abs(ku)[:, None] <= band_u) & (np.abs(ky)[None, :] <= band_y)
        shape = (int(mask.sum()),) + tuple(fiber_shape)
        vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        coeffs[mask] = vals
        values = np.fft.ifft2(coeffs, axes=(0, 1)) * np.sqrt(
            spec.n_u * spec.n_y
        )
        return cls(spec, values, algebra)


def fft(f):
    """Forward FFT over the torus axes; returns the coefficient array."""
    if f.spec.half:
        raise StructureError("FFT requires the full torus")
    return np.fft.fft2(f.values, axes=(0, 1))


def ifft(f_spec, coeffs, algebra=None):
    return GridFunction(
        f_spec, np.fft.ifft2(coeffs, axes=(0, 1)), algebra
    )


class FourierMultiplier:
    """Diagonal operator in the discrete Fourier basis.

    ``symbol(xi_u, eta)`` receives broadcastable frequency arrays and
    returns either a scalar array (pointwise multiplier) or an array with
    two trailing fiber-matrix axes.
    """

    def __init__(self, symbol, order_shift=0.0):
        self.symbol = symbol
        self.order_shift = float(order_shift)

    def apply(self, f):
        coeffs = fft(f)
        sym = self.symbol(
            f.spec.xi_u()[:, None], f.spec.eta()[None, :]
        )
        sym = np.asarray(sym, dtype=complex)
        if sym.ndim == 2:
            coeffs = coeffs * sym[:, :, None, None]
        else:
            coeffs = np.einsum("uyij,uyjk->uyik", sym, coeffs)
        return ifft(f.spec, coeffs, f.algebra)


def sobolev_norm(f, s):
    """Spectral Sobolev norm of order ``s`` on the torus."""
    if f.spec.half:
        raise StructureError("sobolev_norm is defined on the torus")
    coeffs = fft(f)
    xi2 = f.spec.xi_u()[:, None] ** 2 + f.spec.eta()[None, :] ** 2
    weights = (1.0 + xi2) ** s
    total = np.sum(
        weights[:, :, None, None] * np.abs(coeffs) ** 2
    )
    n_pts = f.spec.n_u * f.spec.n_y
    return float(np.sqrt(total.real)) / n_pts


def boundary_norm(profile, s):
    """Sobolev norm of a y-profile on the boundary circle (same convention)."""
    coeffs = np.fft.fft(profile, axis=0)
    n_y = profile.shape[0]
    eta = np.fft.fftfreq(n_y, d=1.0 / n_y)
    weights = (1.0 + eta**2) ** s
    total = np.sum(
        weights.reshape((n_y,) + (1,) * (profile.ndim - 1))
        * np.abs(coeffs) ** 2
    )
    return float(np.sqrt(total.real)) / n_y


def lambda_pm(f, sign):
    """The operator -/+ d/du + sqrt(1 + Delta_tangential) as a multiplier.

    ``sign`` +1 gives the + variant (symbol -i xi_u + sqrt(1+eta^2)); the
    two variants are mutually adjoint in discrete L^2 and their product is
    the multiplier of 1 + Delta.
    """
    if sign not in (+1, -1):
        raise StructureError("sign must be +1 or -1")

    def symbol(xi_u, eta):
        return -sign * 1j * xi_u + np.sqrt(1.0 + eta**2)

    return FourierMultiplier(symbol, order_shift=-1.0).apply(f)


def embed_adjoint(h):
    """Adjoint of the H^1 -> H^0 embedding: divide by (1 + |xi|^2)."""

    def symbol(xi_u, eta):
        return 1.0 / (1.0 + xi_u**2 + eta**2)

    return FourierMultiplier(symbol, order_shift=2.0).apply(h)


def extend_reflect(f):
    """Odd reflection of a half-domain function onto the torus."""
    if not f.spec.half:
        raise StructureError("extend_reflect expects a half-domain function")
    spec = f.spec.as_torus()
    n_u = spec.n_u
    half = n_u // 2
    values = np.empty((n_u,) + f.values.shape[1:], dtype=complex)
    values[: half + 1] = f.values
    for j in range(half + 1, n_u):
        values[j] = -f.values[n_u - j]
    return GridFunction(spec, values, f.algebra)


def restrict(g):
    """Restriction of a torus function to the half-domain u in [0,1]."""
    if g.spec.half:
        raise StructureError("already a half-domain function")
    half = g.spec.n_u // 2
    return GridFunction(g.spec.as_half(), g.values[: half + 1].copy(), g.algebra)


def extend_adjoint(g):
    """Discrete adjoint of the odd reflection extension.

    Folds to (g(u) - g(2-u)) at interior nodes and keeps the boundary
    samples, which pair with themselves on the torus; with these endpoint
    weights the quadrature identity <extend(f), g> = <f, fold(g)> is exact.
    """
    if g.spec.half:
        raise StructureError("extend_adjoint expects a torus function")
    n_u = g.spec.n_u
    half = n_u // 2
    values = np.empty((half + 1,) + g.values.shape[1:], dtype=complex)
    values[0] = g.values[0]
    values[half] = g.values[half]
    for j in range(1, half):
        values[j] = g.values[j] - g.values[n_u - j]
    return GridFunction(g.spec.as_half(), values, g.algebra)


def half_inner(f, g):
    """Plain discrete pairing on the half-domain (unit node weights).

    Companion of :func:`extend_adjoint`; pair it with ``torus_inner`` for
    the exact adjoint identity.
    """
    return complex(np.sum(f.values.conj() * g.values))


def torus_inner(f, g):
    return complex(np.sum(f.values.conj() * g.values))


@dataclass
class TraceReport:
    profile: np.ndarray
    ratio: float
    t: float
    s: float


def trace(f, t, s):
    """Restrict to the slice u = t and report the trace-norm ratio.

    The slice must be a grid node: interpolation is refused.  The ratio is
    ||gamma_t f||_{s-1/2} / ||f||_s; it degenerates as s approaches 1/2.
    """
    spec = f.spec
    pos = t / spec.du
    j = int(round(pos))
    if abs(pos - j) > 1e-12 or not (0 <= j < spec.n_u_points):
        raise StructureError("slice t=%r is not a grid node" % (t,))
    profile = f.values[j].copy()
    denom = sobolev_norm(f if not spec.half else extend_reflect(f), s)
    num = boundary_norm(profile, s - 0.5)
    ratio = num / denom if denom > 0 else 0.0
    return TraceReport(profile=profile, ratio=ratio, t=float(t), s=float(s))


# -- serialization ------------------------------------------------------


def save_grid_function(path, f):
    """Flat binary layout: one JSON header line, then raw complex128 bytes."""
    header = {
        "format": "calderon-grid-v1",
        "dim": f.spec.dim,
        "n_u": f.spec.n_u,
        "n_y": f.spec.n_y,
        "half": f.spec.half,
        "fiber": list(f.fiber_shape),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(f.values, dtype=np.complex128).tobytes())


def load_grid_function(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != "calderon-grid-v1":
            raise StructureError("unrecognized grid file format")
        spec = GridSpec(
            header["dim"], header["n_u"], header["n_y"], header["half"]
        )
        shape = (spec.n_u_points, spec.n_y) + tuple(header["fiber"])
        data = np.frombuffer(fh.read(), dtype=np.complex128).reshape(shape)
    return GridFunction(spec, data.copy())


def grid_function_to_csv(path, f):
    """Plot-ready CSV: one row per grid point, real/imag per fiber entry."""
    rows, cols = f.fiber_shape
    with open(path, "w") as fh:
        heads = ["u", "y"]
        for i in range(rows):
            for j in range(cols):
                heads += ["re_%d_%d" % (i, j), "im_%d_%d" % (i, j)]
        fh.write(",".join(heads) + "\n")
        u_nodes = f.spec.u_nodes()
        y_nodes = f.spec.y_nodes()
        for iu, u in enumerate(u_nodes):
            for iy, y in enumerate(y_nodes):
                entries = ["%.17g" % u, "%.17g" % y]
                for i in range(rows):
                    for j in range(cols):
                        z = f.values[iu, iy, i, j]
                        entries += ["%.17g" % z.real, "%.17g" % z.imag]
                fh.write(",".join(entries) + "\n")
