"""Spectral simulation of a five-component morphogen transport system on a thin rectangle."""
from .spectral import SpectralField1D, SpectralField2D, xs_norm
from .model import ModelParams, UState, ZState, mollifier
from .singular import AuxiliaryPair, build_m_mu, build_m_zero
from .evolution import SolverConfig, Trajectory, evolve_1d_limit, evolve_2d, evolve_regular

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryPair", "ModelParams", "SolverConfig", "SpectralField1D", "SpectralField2D",
    "Trajectory", "UState", "ZState", "build_m_mu", "build_m_zero", "evolve_1d_limit",
    "evolve_2d", "evolve_regular", "mollifier", "xs_norm",
]
