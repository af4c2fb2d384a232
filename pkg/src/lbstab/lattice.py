"""DdQ3^d lattices, product-form equilibria and the viscosity relations."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .eos import EquationOfState, VARSIGMA

_TOKENS = {"d1q3": 1, "d2q9": 2, "d3q27": 3}

# dPsi/du and dPsi/dP for the triplet ordered (-1, 0, +1)
DPSI_DU = np.array([-0.5, 0.0, 0.5])
DPSI_DP = np.array([0.5, -1.0, 0.5])


class NegativePopulationWarning(UserWarning):
    pass


class DegenerateDensityError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeDescriptor:
    """Full tensor-product velocity set, ordered lexicographically, axis-major."""

    D: int
    velocities: np.ndarray = field(init=False, repr=False, compare=False)
    varsigma: float = field(init=False, default=VARSIGMA)
    dr: float = field(init=False, default=1.0)
    dt: float = field(init=False, default=1.0)

    def __post_init__(self):
        if self.D not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.D}")
        c = np.array(list(itertools.product((-1, 0, 1), repeat=self.D)), dtype=np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "velocities", c)

    @classmethod
    def from_token(cls, token: str) -> "LatticeDescriptor":
        try:
            return cls(_TOKENS[token.lower()])
        except KeyError:
            raise ValueError(f"unknown lattice {token!r}; expected one of {sorted(_TOKENS)}") from None

    @property
    def Q(self) -> int:
        return 3**self.D

    @property
    def token(self) -> str:
        return f"d{self.D}q{self.Q}"

    @property
    def index(self) -> np.ndarray:
        """Per-axis triplet index (0, 1, 2) for velocity (-1, 0, +1); shape (Q, D)."""
        return self.velocities + 1


@dataclass(frozen=True)
class UniformState:
    """Uniform base state (rho, u, beta) around which the LBGK map is linearised."""

    rho: float
    u: tuple
    beta: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        object.__setattr__(self, "u", tuple(float(v) for v in np.atleast_1d(self.u)))

    @property
    def velocity(self) -> np.ndarray:
        return np.array(self.u, dtype=float)


D1Q3 = LatticeDescriptor(1)
D2Q9 = LatticeDescriptor(2)
D3Q27 = LatticeDescriptor(3)


def psi_triplet(u_alpha, P):
    """(Psi_-1, Psi_0, Psi_+1) for one axis.  Warns if any weight is negative."""
    psi = (0.5 * (-u_alpha + P), 1.0 - P, 0.5 * (u_alpha + P))
    if any(np.any(np.asarray(p) < 0.0) for p in psi):
        warnings.warn(f"negative population weight for u={u_alpha}, P={P}", NegativePopulationWarning, stacklevel=2)
    return psi


def _psi_array(u, P):
    # (..., 3) without the positivity warning; used on fields
    u = np.asarray(u, dtype=float)
    P = np.asarray(P, dtype=float)
    return np.stack([0.5 * (P - u), 1.0 - P, 0.5 * (P + u)], axis=-1)


def axis_pressures(eos: EquationOfState, rho, u):
    """P_aa = pi*(rho, u_a) + u_a^2 for every axis; ``u`` has the axis last."""
    u = np.asarray(u, dtype=float)
    rho_b = np.asarray(rho, dtype=float)[..., None]
    return eos.pressure(rho_b, u) + u * u


@dataclass(frozen=True)
class EquilibriumSet:
    f_eq: np.ndarray
    psi: np.ndarray  # (D, 3), triplet per axis
    P: np.ndarray  # (D,)

    @property
    def has_negative(self) -> bool:
        return bool(np.any(self.psi < 0.0))


def equilibrium(lat: LatticeDescriptor, eos: EquationOfState, rho: float, u) -> EquilibriumSet:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (lat.D,):
        raise ValueError(f"velocity must have {lat.D} components, got {u.shape}")
    P = np.atleast_1d(axis_pressures(eos, rho, u))
    psi = _psi_array(u, P)
    f = rho * np.prod(psi[np.arange(lat.D), lat.index], axis=1)
    return EquilibriumSet(f_eq=f, psi=psi, P=P)


def equilibrium_field(lat: LatticeDescriptor, eos: EquationOfState, rho, u):
    """Equilibria on a field: ``rho`` shape (*grid), ``u`` shape (D, *grid) -> (Q, *grid)."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    ua = np.moveaxis(u, 0, -1)
    psi = _psi_array(ua, axis_pressures(eos, rho, ua))  # (*grid, D, 3)
    f = np.empty((lat.Q,) + rho.shape)
    for i, idx in enumerate(lat.index):
        w = rho.copy()
        for a in range(lat.D):
            w *= psi[..., a, idx[a]]
        f[i] = w
    return f


def moments(lat: LatticeDescriptor, f):
    """Density and velocity of populations ``f`` (first axis of length Q)."""
    f = np.asarray(f, dtype=float)
    rho = f.sum(axis=0)
    if np.any(rho <= 0.0):
        raise DegenerateDensityError("non-positive density")
    j = np.tensordot(lat.velocities.T.astype(float), f, axes=(1, 0))
    return rho, j / rho


def viscosity_from_beta(beta, pi_star):
    """Kinematic viscosity ``pi* (1/(2 beta) - 1/2)`` in lattice units."""
    if np.any(np.asarray(beta) <= 0.0):
        raise ValueError("beta = 0 corresponds to infinite viscosity")
    return pi_star * (0.5 / beta - 0.5)


def beta_from_viscosity(nu, pi_star):
    return pi_star / (2.0 * nu + pi_star)


def log_pressure_slope(eos: EquationOfState, rho, u=0.0):
    """d ln(rho pi*) / d ln rho."""
    return eos.sound_speed_squared(rho, u) / eos.pressure(rho, u)


def bulk_viscosity(nu, eos: EquationOfState, rho, D: int, u=0.0):
    return nu * ((2.0 + D) / D - log_pressure_slope(eos, rho, u))


def rest_weights(lat: LatticeDescriptor) -> np.ndarray:
    """Standard lattice weights: equilibrium at rho=1, u=0, pi*=varsigma^2."""
    w1 = np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])
    return np.prod(w1[lat.index], axis=1)
