"""Nondimensional model: parameters, reaction terms, the M change of variables
and the mollifier family approximating the boundary Dirac source."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .spectral import SpectralError, SpectralField1D, c1


class ParameterError(ValueError):
    pass


def _vec5(v, name):
    a = np.asarray(v, dtype=float)
    if a.shape != (5,):
        raise ParameterError(f"{name} must have 5 entries")
    return tuple(float(x) for x in a)


@dataclass(frozen=True)
class ModelParams:
    """Constants d, b, c, p of the nondimensional system (1-based in prose,
    0-based here: ``b[0]`` is b1)."""

    d: float = 1.0
    b: tuple = (1.0, 1.0, 1.0, 1.0, 1.0)
    c: tuple = (1.0, 1.0, 1.0, 1.0, 1.0)
    p: tuple = (1.0, 0.0, 1.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "b", _vec5(self.b, "b"))
        object.__setattr__(self, "c", _vec5(self.c, "c"))
        object.__setattr__(self, "p", _vec5(self.p, "p"))
        if not self.d > 0:
            raise ParameterError("d must be positive")
        if min(self.b) <= 0:
            raise ParameterError("b must be positive")
        if min(self.c) < 0 or min(self.p) < 0:
            raise ParameterError("c and p must be nonnegative")
        if self.p[1] or self.p[3] or self.p[4]:
            raise ParameterError("p2, p4, p5 must vanish")

    @property
    def p1(self):
        return self.p[0]

    @property
    def p3(self):
        return self.p[2]

    def replace(self, **kw):
        cur = dict(d=self.d, b=self.b, c=self.c, p=self.p)
        cur.update(kw)
        return ModelParams(**cur)


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional constants of the thin-rectangle transport model."""

    D: float
    D_star: float
    gamma: float
    gamma_star: float
    k: float
    k_prime: float
    k_R: float
    k_R_prime: float
    k_Rg: float
    k_Rg_prime: float
    alpha: float
    alpha_star: float
    s: float
    Gamma: float
    G: float
    L: float
    H: float
    epsilon: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ParameterError(f"{name} must be positive, got {value}")
        if self.epsilon > 1:
            raise ParameterError("epsilon must lie in (0, 1]")


@dataclass(frozen=True)
class Nondimensionalized:
    params: ModelParams
    h: float
    T_scale: float
    K1: float
    K2: float
    h_out_of_range: bool = False


def nondimensionalize(phys):
    T = phys.L**2 / phys.D
    K1 = phys.k_R * T
    K2 = phys.k_R * T / phys.H
    h = phys.epsilon * phys.H / phys.L
    b = (T * phys.gamma, T * phys.gamma_star, T * phys.alpha,
         T * phys.alpha_star, T * phys.alpha_star)
    c = (T * phys.k * phys.G / phys.H, T * phys.k_prime, phys.H * phys.k_Rg / phys.k_R,
         T * phys.k_R_prime, T * phys.k_Rg_prime)
    p = (K2 * T * phys.s, 0.0, K2 * T * phys.Gamma, 0.0, 0.0)
    bad = not 0 < h <= 1
    if bad:
        warnings.warn(f"aspect ratio h={h} outside (0, 1]", stacklevel=2)
    return Nondimensionalized(ModelParams(phys.D_star / phys.D, b, c, p), h, T, K1, K2, bad)


# ---------------------------------------------------------------------------
# reaction terms; arguments broadcast, so these work pointwise on arrays

def reaction_f(u, params):
    u1, u2, u3, u4, u5 = u
    b1, b2, b3, b4, b5 = params.b
    c1_, c2_, c3, c4, c5 = params.c
    p3 = params.p3
    return (
        -(c1_ + u3) * u1 + c2_ * u2 + c4 * u4,
        c1_ * u1 - (b2 + c2_ + c3 * u3) * u2 + c5 * u5,
        -(b3 + u1 + c3 * u2) * u3 + c4 * u4 + c5 * u5 + p3,
        u1 * u3 - (b4 + c4) * u4,
        c3 * u2 * u3 - (b5 + c5) * u5,
    )


def reaction_g(z, m_trace, params):
    """Right-hand sides in the z variables.

    ``m_trace`` is Tr(m^mu) for the 2-d system or m^0 for the limit system;
    the formulas are identical, only the source of the samples differs.
    g3 excludes the -Tr(m) z3 term, which belongs to the linear part.
    """
    z1, z2, z3, z4, z5 = z
    b1, b2, b3, b4, b5 = params.b
    c1_, c2_, c3, c4, c5 = params.c
    p3 = params.p3
    m = m_trace
    return (
        -c1_ * z1 + c2_ * z2 - z1 * z3 + c4 * (z4 - z3) - (c1_ + z3) * m,
        -b2 * z2 + c1_ * z1 - c2_ * z2 - c3 * z2 * z3 + c5 * (z5 - z4) + c1_ * m,
        -b3 * z3 - z1 * z3 - c3 * z2 * z3 + c4 * (z4 - z3) + c5 * (z5 - z4) + p3,
        -b3 * z3 - b4 * (z4 - z3) - c3 * z2 * z3 + c5 * (z5 - z4) + p3,
        -b3 * z3 - b4 * (z4 - z3) - b5 * (z5 - z4) + p3,
    )


# ---------------------------------------------------------------------------
# z = M (u1 - m, u2, u3, u4, u5)

M_MATRIX = np.array([
    [1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0],
    [0, 0, 1, 1, 0],
    [0, 0, 1, 1, 1],
], dtype=float)


@dataclass(frozen=True, eq=False)
class UState:
    u1: object  # SpectralField2D (or SpectralField1D for the limit system)
    u2: SpectralField1D
    u3: np.ndarray
    u4: np.ndarray
    u5: np.ndarray


@dataclass(frozen=True, eq=False)
class ZState:
    z1: object
    z2: SpectralField1D
    z3: np.ndarray
    z4: np.ndarray
    z5: np.ndarray


def _check_compatible(first, m):
    if m is not None and first.coeffs.shape != m.coeffs.shape:
        raise SpectralError(f"resolution mismatch {first.coeffs.shape} vs {m.coeffs.shape}")
    if m is not None and type(first) is not type(m):
        raise SpectralError("layer and field dimensions differ")


def to_z(u, m=None):
    _check_compatible(u.u1, m)
    z1 = u.u1 if m is None else u.u1 - m
    u3, u4, u5 = (np.asarray(v, dtype=float) for v in (u.u3, u.u4, u.u5))
    if not u3.shape == u4.shape == u5.shape:
        raise SpectralError("pointwise components must share one grid")
    return ZState(z1, u.u2, u3, u3 + u4, u3 + u4 + u5)


def from_z(z, m=None):
    _check_compatible(z.z1, m)
    u1 = z.z1 if m is None else z.z1 + m
    return UState(u1, z.z2, z.z3, z.z4 - z.z3, z.z5 - z.z4)


# ---------------------------------------------------------------------------
# mollifier

def _bump(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    out[inside] = np.exp(1.0 / (y[inside] ** 2 - 1.0))
    return out


_BUMP_MASS = integrate.quad(lambda y: float(_bump(y)), -1.0, 1.0, epsabs=0, epsrel=1e-13)[0]
BUMP_CONSTANT = 1.0 / _BUMP_MASS


@dataclass(frozen=True)
class Mollifier:
    """eta^eps(x) = eta(x/eps)/eps with unit mass; eps = 0 is the Dirac delta."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ParameterError(f"epsilon={self.epsilon} must lie in [0, 1]")

    @property
    def is_delta(self):
        return self.epsilon == 0.0

    def eval(self, x):
        if self.is_delta:
            raise ParameterError("the Dirac delta has no pointwise values")
        e = self.epsilon
        return BUMP_CONSTANT * _bump(np.asarray(x, dtype=float) / e) / e

    def spectral_1d(self, n):
        """Pairings g_i = <eta^eps, u_i>, i < n.

        Even symmetry kills odd i; for even i the pairing reduces to
        u_i(0) times the cosine transform of the unit bump at i pi eps / 2.
        """
        i = np.arange(n)
        u_at_0 = c1(i) * np.cos(i * np.pi / 2.0)
        u_at_0[1::2] = 0.0
        if self.is_delta:
            return u_at_0
        return u_at_0 * self._bump_cosine(np.arange(0, n, 2) * np.pi * self.epsilon / 2.0, n)

    def _bump_cosine(self, k_even, n):
        vals = np.zeros(n)
        # Integrand on [0, 1) by symmetry; quad_vec refines adaptively (GK21).
        res, _ = integrate.quad_vec(
            lambda y: 2.0 * BUMP_CONSTANT * _bump(y) * np.cos(k_even * y),
            0.0, 1.0, epsabs=1e-14, epsrel=1e-11, limit=2000,
        )
        vals[0::2] = res
        return vals

    def field(self, n):
        return SpectralField1D(self.spectral_1d(n))


def mollifier(epsilon):
    return Mollifier(float(epsilon))


DEFAULT_THETA = 1.0 / 32.0
DEFAULT_P_EXP = 4.0


def check_exponents(theta, p_exp):
    if not p_exp > 2:
        raise ParameterError(f"p={p_exp} must exceed 2")
    if not 0 < theta < min(1.0 / 16.0, 1.0 / (2.0 * p_exp)):
        raise ParameterError(f"theta={theta} outside (0, min(1/16, 1/(2p)))")
