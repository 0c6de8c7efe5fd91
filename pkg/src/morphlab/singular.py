"""Auxiliary layers m^mu = R(b1, A_h)(p1 Tr' eta^eps) and m^0 = R(b1, A_0)(p1 delta).

Both are resolvent images of the boundary source, hence diagonal in the
cosine bases.  They carry the whole spatial singularity of u1, which is
why the M-mild formulation subtracts them.
"""
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, ParameterError, mollifier
from .spectral import (
    CollocationGrid,
    SpectralError,
    SpectralField1D,
    SpectralField2D,
    check_aspect,
    coeffs_to_samples_1d,
    eigenvalue_rect,
    eval_1d,
    extend_E,
    resolvent,
    trace_adjoint,
    trace_coeffs,
    xs_norm,
)

NONNEG_TOL = 1e-8


class GridError(SpectralError):
    pass


def _check_b1(params):
    if not params.b[0] > 0:
        raise ParameterError("b1 must be positive")


def build_m_mu(params, h, epsilon, n1, n2):
    _check_b1(params)
    check_aspect(h)
    g = mollifier(epsilon).field(n1)
    return resolvent(trace_adjoint(g * params.p1, n2), params.b[0], h=h)


def build_m_zero(params, n1):
    _check_b1(params)
    g = mollifier(0.0).field(n1)
    return resolvent(g * params.p1, params.b[0])


def m_zero_closed_form(x, b1, p1):
    """Green's function of b1 m - m'' = p1 delta on I with Neumann ends."""
    r = np.sqrt(b1)
    x = np.asarray(x, dtype=float)
    return p1 * np.cosh(r * (1.0 - np.abs(x))) / (2.0 * r * np.sinh(r))


@dataclass(frozen=True, eq=False)
class AuxiliaryPair:
    m_mu: SpectralField2D
    m_zero: SpectralField1D
    h: float
    epsilon: float
    params: ModelParams

    @classmethod
    def build(cls, params, h, epsilon, n1, n2):
        return cls(build_m_mu(params, h, epsilon, n1, n2), build_m_zero(params, n1),
                   float(h), float(epsilon), params)

    def trace_samples(self, grid):
        return trace_of_m(self.m_mu, grid, singular=self.epsilon == 0.0)

    def zero_samples(self, grid):
        return _checked(coeffs_to_samples_1d(self.m_zero.coeffs, grid.n1))


def _checked(samples):
    if not np.all(np.isfinite(samples)):
        raise GridError("non-finite layer samples")
    if samples.min() < -NONNEG_TOL:
        raise GridError(f"layer trace negative ({samples.min():.3e}) beyond tolerance")
    return samples


def trace_of_m(m_mu, grid, singular=True):
    """Nodal values of Tr(m^mu) by direct summation of the truncated series.

    ``grid`` is a :class:`CollocationGrid` or an array of points in I.
    """
    b = trace_coeffs(m_mu.coeffs)
    if isinstance(grid, CollocationGrid):
        return _checked(coeffs_to_samples_1d(b, grid.n1))
    x = np.asarray(grid, dtype=float)
    if singular and np.any(x == 0.0):
        raise GridError("node at the source point x1 = 0")
    return _checked(eval_1d(b, x))


@dataclass(frozen=True)
class SwallowRow:
    h: float
    epsilon: float
    layer_eps_gap: float        # |m^mu - m^mu0|_{X^{1/2-s}(Omega)}
    source_gap: float           # |eta^eps - delta|_{X^{-1/4-s}(I)}
    layer_dim_gap: float        # |m^mu0 - E m^0|_{X^{1/2-s}(Omega)}
    dim_rate: float             # |lambda_01,h|^{-s/2} = (h / pi)^s


def swallow_diagnostics(params, h_list, eps_list, s, n1, n2):
    """Per-(h, eps) quantities bounding the layer differences.

    The first two columns are defined for 0 < s <= 3/4 and are ``None``
    beyond that; the last two for 0 < s <= 3/2.
    """
    if not 0 < s <= 1.5:
        raise ParameterError(f"s={s} outside (0, 3/2]")
    eps_cols = s <= 0.75
    m0_ext = extend_E(build_m_zero(params, n1), n2)
    delta = mollifier(0.0).field(n1)
    rows = []
    for h in h_list:
        m_h0 = build_m_mu(params, h, 0.0, n1, n2)
        dim_gap = xs_norm(m_h0 - m0_ext, 0.5 - s)
        rate = float(abs(eigenvalue_rect(0, 1, h)) ** (-s / 2.0))
        for eps in eps_list:
            if eps_cols:
                gap = 0.0 if eps == 0 else xs_norm(build_m_mu(params, h, eps, n1, n2) - m_h0, 0.5 - s)
                src = 0.0 if eps == 0 else xs_norm(mollifier(eps).field(n1) - delta, -0.25 - s)
            else:
                gap = src = None
            rows.append(SwallowRow(float(h), float(eps), gap, src, dim_gap, rate))
    return rows
