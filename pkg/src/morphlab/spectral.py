"""Cosine-basis spectral machinery on I = (-1, 1) and Omega = I x (0, 1).

Functions are stored by their coefficients in the normalised Neumann bases

    u_i(x1) = c1_i cos(i pi (x1 + 1) / 2),   c1_0 = 1/sqrt(2), c1_i = 1,
    v_j(x2) = c2_j cos(j pi x2),             c2_0 = 1,         c2_j = sqrt(2),
    w_ij    = u_i (x) v_j.

Every operator below is diagonal (or rank-structured) in these bases, so all
of them act exactly on a fixed truncation box.  Physical samples live on
midpoint grids, on which the cosine transforms are orthonormal DCT-II/III
pairs up to a constant factor.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

S_MIN, S_MAX = -1.0, 1.5


class SpectralError(ValueError):
    """Raised on a violated parameter range or incompatible shapes."""


def _finite(coeffs, ndim):
    a = np.asarray(coeffs, dtype=float)
    if a.ndim != ndim:
        raise SpectralError(f"expected a {ndim}-d coefficient array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SpectralError("coefficients must be finite")
    a = a.copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralField1D:
    """Coefficients a_i of sum_i a_i u_i on I."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _finite(self.coeffs, 1))

    @property
    def n_modes(self):
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def mode(cls, i, n):
        a = np.zeros(n)
        a[i] = 1.0
        return cls(a)

    def __add__(self, other):
        return SpectralField1D(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField1D(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField1D(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField1D(-self.coeffs)


@dataclass(frozen=True, eq=False)
class SpectralField2D:
    """Coefficients a_ij of sum_ij a_ij w_ij on Omega."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _finite(self.coeffs, 2))

    @property
    def n_modes(self):
        return self.coeffs.shape

    @classmethod
    def zeros(cls, n1, n2):
        return cls(np.zeros((n1, n2)))

    @classmethod
    def mode(cls, i, j, n1, n2):
        a = np.zeros((n1, n2))
        a[i, j] = 1.0
        return cls(a)

    def __add__(self, other):
        return SpectralField2D(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField2D(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField2D(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField2D(-self.coeffs)


def check_sobolev_index(s):
    if not S_MIN <= s <= S_MAX:
        raise SpectralError(f"Sobolev index {s} outside [{S_MIN}, {S_MAX}]")
    return float(s)


def check_aspect(h):
    if not 0.0 < h <= 1.0:
        raise SpectralError(f"aspect ratio h={h} must lie in (0, 1]")
    return float(h)


# ---------------------------------------------------------------------------
# eigenvalues and basis functions

def c1(i):
    i = np.asarray(i)
    return np.where(i == 0, 1.0 / np.sqrt(2.0), 1.0)


def c2(j):
    j = np.asarray(j)
    return np.where(j == 0, 1.0, np.sqrt(2.0))


def eigenvalue_interval(i):
    """lambda^I_i = -(i pi / 2)^2."""
    return -(np.asarray(i, dtype=float) * np.pi / 2.0) ** 2


def eigenvalue_half(j):
    """lambda^{I+}_j = -(j pi)^2."""
    return -(np.asarray(j, dtype=float) * np.pi) ** 2


def eigenvalue_rect(i, j, h=1.0):
    """lambda^Omega_{ij,h} = lambda^I_i + h^-2 lambda^{I+}_j."""
    h = check_aspect(h)
    return eigenvalue_interval(i) + eigenvalue_half(j) / h**2


def eigenvalue(index, direction="I", h=1.0):
    """Eigenvalue of the Neumann Laplacian scale.

    ``direction`` is ``"I"``, ``"I+"`` or ``"Omega"``; for ``"Omega"`` the
    index is a pair ``(i, j)``.
    """
    if direction == "I":
        return float(eigenvalue_interval(index))
    if direction == "I+":
        return float(eigenvalue_half(index))
    if direction == "Omega":
        i, j = index
        return float(eigenvalue_rect(i, j, h))
    raise SpectralError(f"unknown direction {direction!r}")


def eigen_grid_1d(n):
    return eigenvalue_interval(np.arange(n))


def eigen_grid_2d(n1, n2, h=1.0):
    i = np.arange(n1)[:, None]
    j = np.arange(n2)[None, :]
    return eigenvalue_rect(i, j, h)


def _inside(x, lo, hi):
    x = np.asarray(x, dtype=float)
    if np.any((x < lo) | (x > hi)):
        raise SpectralError(f"point outside [{lo}, {hi}]")
    return x


def basis_u(i, x1):
    x1 = _inside(x1, -1.0, 1.0)
    return c1(i) * np.cos(i * np.pi * (x1 + 1.0) / 2.0)


def basis_v(j, x2):
    x2 = _inside(x2, 0.0, 1.0)
    return c2(j) * np.cos(j * np.pi * x2)


def basis_w(i, j, x1, x2):
    return basis_u(i, x1) * basis_v(j, x2)


def basis_eval(indices, point):
    """Evaluate u_i (scalar index, scalar point) or w_ij (pair, pair)."""
    if np.ndim(indices) == 0:
        return float(basis_u(indices, point))
    i, j = indices
    x1, x2 = point
    return float(basis_w(i, j, x1, x2))


# ---------------------------------------------------------------------------
# collocation grids and transforms

@dataclass(frozen=True)
class CollocationGrid:
    """Midpoint grid: x1_k = -1 + (2k+1)/n1, x2_l = (2l+1)/(2 n2)."""

    n1: int
    n2: int = 0

    def __post_init__(self):
        if self.n1 <= 0 or self.n1 % 2:
            raise SpectralError(f"n1={self.n1} must be a positive even integer")
        if self.n2 < 0:
            raise SpectralError("n2 must be nonnegative")

    @property
    def dimension(self):
        return 2 if self.n2 else 1

    @cached_property
    def x1(self):
        return -1.0 + (2.0 * np.arange(self.n1) + 1.0) / self.n1

    @cached_property
    def x2(self):
        return (2.0 * np.arange(self.n2) + 1.0) / (2.0 * self.n2)

    @property
    def weight1(self):
        """Midpoint quadrature weight on I."""
        return 2.0 / self.n1

    @property
    def weight2(self):
        return 1.0 / self.n2


def _pad(a, shape):
    if any(n < m for n, m in zip(shape, a.shape)):
        raise SpectralError(f"grid {shape} smaller than field modes {a.shape}")
    out = np.zeros(shape)
    out[tuple(slice(0, m) for m in a.shape)] = a
    return out


def coeffs_to_samples_1d(a, m):
    """Values of sum_i a_i u_i on the m-point midpoint grid."""
    return np.sqrt(m / 2.0) * fft.idct(_pad(np.asarray(a, float), (m,)), norm="ortho")


def samples_to_coeffs_1d(f, n=None):
    """Coefficients (first n) of the interpolant of midpoint samples f."""
    f = np.asarray(f, dtype=float)
    m = f.shape[0]
    a = np.sqrt(2.0 / m) * fft.dct(f, norm="ortho")
    return a if n is None else a[:n]


def coeffs_to_samples_2d(a, shape):
    m1, m2 = shape
    b = _pad(np.asarray(a, float), (m1, m2))
    return np.sqrt(m1 / 2.0) * np.sqrt(m2) * fft.idctn(b, norm="ortho")


def samples_to_coeffs_2d(f, n=None):
    f = np.asarray(f, dtype=float)
    m1, m2 = f.shape
    a = fft.dctn(f, norm="ortho") * np.sqrt(2.0 / m1) / np.sqrt(m2)
    if n is None:
        return a
    return a[: n[0], : n[1]]


def to_physical(field, grid):
    """Sample a spectral field on a collocation grid."""
    if isinstance(field, SpectralField2D):
        if grid.dimension != 2:
            raise SpectralError("2-d field needs a 2-d grid")
        return coeffs_to_samples_2d(field.coeffs, (grid.n1, grid.n2))
    return coeffs_to_samples_1d(field.coeffs, grid.n1)


def to_spectral(samples, grid, n_modes=None):
    """Inverse of :func:`to_physical` for band-limited data."""
    samples = np.asarray(samples, dtype=float)
    if grid.dimension == 2:
        if samples.shape != (grid.n1, grid.n2):
            raise SpectralError(f"samples {samples.shape} do not match grid {(grid.n1, grid.n2)}")
        return SpectralField2D(samples_to_coeffs_2d(samples, n_modes))
    if samples.shape != (grid.n1,):
        raise SpectralError(f"samples {samples.shape} do not match grid ({grid.n1},)")
    return SpectralField1D(samples_to_coeffs_1d(samples, n_modes))


def eval_1d(a, x):
    """Direct summation of sum_i a_i u_i(x) at arbitrary points."""
    x = np.atleast_1d(_inside(x, -1.0, 1.0))
    i = np.arange(len(a))
    return np.cos(np.pi * np.outer((x + 1.0) / 2.0, i)) @ (c1(i) * a)


# ---------------------------------------------------------------------------
# norms

def xs_weights_1d(n, s):
    return (1.0 - eigen_grid_1d(n)) ** (2.0 * s)


def xs_weights_2d(n1, n2, s):
    # X^s(Omega) is built on A = A_1 regardless of the aspect ratio.
    return (1.0 - eigen_grid_2d(n1, n2, 1.0)) ** (2.0 * s)


def xs_norm(field, s):
    """X^s norm; for s < 0 the same weighted sum (exact on finite sums)."""
    s = check_sobolev_index(s)
    a = field.coeffs if hasattr(field, "coeffs") else np.asarray(field, float)
    if a.ndim == 1:
        w = xs_weights_1d(a.shape[0], s)
    else:
        w = xs_weights_2d(*a.shape, s)
    return float(np.sqrt(np.sum(w * a * a)))


def lp_norm(samples, p, weight):
    """Midpoint-rule L_p norm; p = inf gives the max norm."""
    f = np.abs(np.asarray(samples, dtype=float))
    if np.isinf(p):
        return float(f.max()) if f.size else 0.0
    return float((weight * np.sum(f**p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# E, P, Tr, Tr'

def extend_E(field, n2):
    """[Eu](x1, x2) = u(x1): E u_k = w_k0."""
    a = np.zeros((field.n_modes, n2))
    a[:, 0] = field.coeffs
    return SpectralField2D(a)


def average_P(field):
    """[Pw](x1) = int w dx2: P w_ij = u_i delta_0j."""
    return SpectralField1D(field.coeffs[:, 0])


def trace_coeffs(a):
    """Coefficients of Tr(w) = w(., 0): b_i = sum_j a_ij c2_j."""
    a = np.asarray(a)
    return a @ c2(np.arange(a.shape[1]))


def trace_Tr(field):
    return SpectralField1D(trace_coeffs(field.coeffs))


def trace_adjoint_coeffs(g, n2):
    return np.outer(g, c2(np.arange(n2)))


def trace_adjoint(field, n2):
    """Tr' g: coefficients g_i c2_j."""
    return SpectralField2D(trace_adjoint_coeffs(field.coeffs, n2))


def remove_mean_layer(field):
    """(I - EP) w: drop the j = 0 row."""
    a = field.coeffs.copy()
    a[:, 0] = 0.0
    return SpectralField2D(a)


# ---------------------------------------------------------------------------
# resolvents and semigroups

def _spectrum(field, h, diffusivity):
    if isinstance(field, SpectralField2D):
        return diffusivity * eigen_grid_2d(*field.n_modes, h)
    return diffusivity * eigen_grid_1d(field.n_modes)


def _rebuild(field, coeffs):
    return type(field)(coeffs)


def resolvent(field, lam, h=1.0, shift=0.0, diffusivity=1.0):
    """R(lam, d A - shift) applied modewise: a / (lam + shift - d lambda)."""
    if lam <= 0:
        raise SpectralError(f"resolvent parameter {lam} must be positive")
    if shift < 0:
        raise SpectralError("shift must be nonnegative")
    spec = _spectrum(field, h, diffusivity)
    return _rebuild(field, field.coeffs / (lam + shift - spec))


def semigroup_apply(field, t, h=1.0, shift=0.0, diffusivity=1.0):
    """exp(t (d A - shift)) applied modewise."""
    if t < 0:
        raise SpectralError(f"semigroup time {t} must be nonnegative")
    if shift < 0:
        raise SpectralError("shift must be nonnegative")
    spec = _spectrum(field, h, diffusivity)
    return _rebuild(field, field.coeffs * np.exp(t * (spec - shift)))


def mult_semigroup_apply(f_samples, t, u_samples):
    """exp(t M_f) u = exp(t f) u pointwise, for f <= 0."""
    f = np.asarray(f_samples, dtype=float)
    if t < 0:
        raise SpectralError(f"semigroup time {t} must be nonnegative")
    if np.any(f > 0):
        raise SpectralError("multiplication generator must be nonpositive")
    return np.exp(t * f) * np.asarray(u_samples, dtype=float)
