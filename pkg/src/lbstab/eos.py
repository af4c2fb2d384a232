"""Equations of state entering the LBGK equilibrium through the reduced pressure.

The reduced pressure ``pi*`` is the thermodynamic pressure divided by the
density.  Every variant exposes ``pressure``, its density and velocity
derivatives, and the sound speed ``sqrt(d(rho pi*)/d rho)``.  Only the
entropic variant depends on the flow velocity, and it does so per lattice
axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

VARSIGMA = 1.0 / math.sqrt(3.0)


class EOSDomainError(ValueError):
    """State lies outside the domain of the equation of state."""


class NonHyperbolicError(EOSDomainError):
    """d(rho pi*)/d rho < 0: the Euler system has no real sound speed."""


class SupercriticalError(EOSDomainError):
    """Coexistence requested at or above the critical temperature."""


class MaxwellConvergenceError(RuntimeError):
    pass


def _like(value, *args):
    """``value`` broadcast against the shapes of ``args``; plain float for scalars."""
    shape = np.broadcast(*[np.asarray(a) for a in args]).shape
    if shape == ():
        return float(value)
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()


def _check_rho(rho):
    if np.any(np.asarray(rho) <= 0.0):
        raise EOSDomainError(f"density must be positive, got {rho}")


class EquationOfState:
    """Base class; subclasses are frozen dataclasses."""

    kind: str = ""
    velocity_dependent = False

    def pressure(self, rho, u=0.0):
        raise NotImplementedError

    def dpressure_drho(self, rho, u=0.0):
        raise NotImplementedError

    def dpressure_du(self, rho, u=0.0):
        return _like(0.0, rho, u)

    def sound_speed_squared(self, rho, u=0.0):
        """d(rho pi*)/d rho at fixed velocity."""
        return self.pressure(rho, u) + rho * self.dpressure_drho(rho, u)

    def sound_speed(self, rho, u=0.0):
        s2 = self.sound_speed_squared(rho, u)
        if np.any(np.asarray(s2) < 0.0):
            raise NonHyperbolicError(f"d(rho pi*)/d rho = {s2} < 0 at rho = {rho}")
        return np.sqrt(s2)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class IdealGas(EquationOfState):
    R: float = 1.0
    T: float = 1.0 / 3.0

    kind = "ideal"

    def __post_init__(self):
        if self.R <= 0 or self.T <= 0:
            raise EOSDomainError(f"ideal gas needs R > 0 and T > 0, got R={self.R}, T={self.T}")

    @classmethod
    def from_sound_speed(cls, varsigma_rho: float, R: float = 1.0) -> "IdealGas":
        return cls(R=R, T=varsigma_rho**2 / R)

    def pressure(self, rho, u=0.0):
        _check_rho(rho)
        return _like(self.R * self.T, rho, u)

    def dpressure_drho(self, rho, u=0.0):
        return _like(0.0, rho, u)

    def to_config(self):
        return {"type": "ideal", "R": self.R, "T": self.T}


@dataclass(frozen=True)
class ShallowWater(EquationOfState):
    """``pi* = g rho / 2``; ``rho`` is the water column height."""

    g: float = 2.0 / 3.0

    kind = "shallow_water"

    def __post_init__(self):
        if self.g <= 0:
            raise EOSDomainError(f"g must be positive, got {self.g}")

    def pressure(self, rho, u=0.0):
        _check_rho(rho)
        return _like(0.5 * self.g * np.asarray(rho, dtype=float), rho, u)

    def dpressure_drho(self, rho, u=0.0):
        return _like(0.5 * self.g, rho, u)

    def to_config(self):
        return {"type": "shallow_water", "g": self.g}


@dataclass(frozen=True)
class VanDerWaals(EquationOfState):
    """``pi* = R T / (1 - b rho) - a rho``."""

    a: float = 1.0 / 49.0
    b: float = 2.0 / 21.0
    R: float = 1.0
    T: float = 0.8 * 8.0 / 49.0 / (27.0 * 2.0 / 21.0)

    kind = "vdw"

    def __post_init__(self):
        if self.a < 0 or self.b <= 0 or self.R <= 0 or self.T <= 0:
            raise EOSDomainError(
                f"van der Waals needs a >= 0, b, R, T > 0; got a={self.a}, b={self.b}, R={self.R}, T={self.T}"
            )

    @classmethod
    def from_reduced(cls, Tr: float, a: float = 1.0 / 49.0, b: float = 2.0 / 21.0, R: float = 1.0):
        return cls(a=a, b=b, R=R, T=Tr * 8.0 * a / (27.0 * b * R))

    @property
    def T_c(self) -> float:
        return 8.0 * self.a / (27.0 * self.b * self.R)

    @property
    def rho_c(self) -> float:
        return 1.0 / (3.0 * self.b)

    @property
    def P_c(self) -> float:
        return self.a / (27.0 * self.b**2)

    @property
    def Tr(self) -> float:
        return self.T / self.T_c

    def rho_from_reduced(self, rho_r):
        return rho_r * self.rho_c

    def _check(self, rho):
        _check_rho(rho)
        if np.any(self.b * np.asarray(rho) >= 1.0):
            raise EOSDomainError(f"b rho must stay below 1, got b rho = {self.b * np.asarray(rho)}")

    def pressure(self, rho, u=0.0):
        self._check(rho)
        rho = np.asarray(rho, dtype=float)
        return _like(self.R * self.T / (1.0 - self.b * rho) - self.a * rho, rho, u)

    def dpressure_drho(self, rho, u=0.0):
        self._check(rho)
        rho = np.asarray(rho, dtype=float)
        return _like(self.R * self.T * self.b / (1.0 - self.b * rho) ** 2 - self.a, rho, u)

    def sound_speed_squared(self, rho, u=0.0):
        self._check(rho)
        rho = np.asarray(rho, dtype=float)
        return _like(self.R * self.T / (1.0 - self.b * rho) ** 2 - 2.0 * self.a * rho, rho, u)

    def to_config(self):
        return {"type": "vdw", "a": self.a, "b": self.b, "R": self.R, "T": self.T}


@dataclass(frozen=True)
class EntropicIsothermal(EquationOfState):
    """Velocity-dependent isothermal pressure of the entropic equilibrium.

    ``pi*(u) = s^2 (2 sqrt(1 + (u/s)^2) - 1 - (u/s)^2)`` evaluated per axis
    with that axis' velocity component.  Evaluated through the cancellation
    free form ``s^2 (1 - w^2)`` with ``w = sqrt(1 + x^2) - 1``.
    """

    varsigma: float = VARSIGMA

    kind = "entropic"
    velocity_dependent = True

    def __post_init__(self):
        if self.varsigma <= 0:
            raise EOSDomainError(f"varsigma must be positive, got {self.varsigma}")

    def _w(self, u):
        x2 = (np.asarray(u, dtype=float) / self.varsigma) ** 2
        return x2 / (1.0 + np.sqrt(1.0 + x2))

    def pressure(self, rho, u=0.0):
        _check_rho(rho)
        w = self._w(u)
        return _like(self.varsigma**2 * (1.0 - w * w), rho, u)

    def dpressure_drho(self, rho, u=0.0):
        _check_rho(rho)
        return _like(0.0, rho, u)

    def dpressure_du(self, rho, u=0.0):
        _check_rho(rho)
        x = np.asarray(u, dtype=float) / self.varsigma
        return _like(-2.0 * self.varsigma * self._w(u) * x / np.sqrt(1.0 + x * x), rho, u)

    def to_config(self):
        return {"type": "entropic", "varsigma": self.varsigma}


# ---------------------------------------------------------------------------
# module-level operations


def pressure(eos: EquationOfState, rho, u=0.0):
    """Reduced pressure; ``u`` only matters for the entropic variant."""
    return eos.pressure(rho, u)


def sound_speed(eos: EquationOfState, rho, u=0.0):
    return eos.sound_speed(rho, u)


def pressure_velocity_derivative(eos: EquationOfState, rho, u=0.0):
    if not eos.velocity_dependent:
        eos.pressure(rho, u)  # domain check
    return eos.dpressure_du(rho, u)


@dataclass(frozen=True)
class CoexistencePair:
    rho_vapor: float
    rho_liquid: float
    p_sat: float


def spinodal_densities(eos: VanDerWaals) -> tuple[float, float]:
    """Densities where d(rho pi*)/d rho vanishes, ordered (vapor side, liquid side)."""
    if eos.T >= eos.T_c:
        raise SupercriticalError(f"T = {eos.T} >= T_c = {eos.T_c}")
    f = eos.sound_speed_squared
    rc = eos.rho_c
    # sound_speed_squared is positive near 0 and near 1/b, negative at rho_c below T_c
    lo = _bisect(lambda r: f(r), 1e-300, rc)
    hi = _bisect(lambda r: -f(r), rc, (1.0 - 1e-15) / eos.b)
    return lo, hi


def _bisect(fun, lo, hi, maxiter=200):
    """Root of ``fun`` on [lo, hi] given fun(lo) > 0 > fun(hi)."""
    flo = fun(lo)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equal_area_residual(eos: VanDerWaals, rho_v: float, rho_l: float, p: float) -> float:
    """Integral of (P - p) dv from v_liquid to v_vapor, in specific volume."""
    vl, vv = 1.0 / rho_l, 1.0 / rho_v
    b, a, RT = eos.b, eos.a, eos.R * eos.T
    integral = RT * math.log((vv - b) / (vl - b)) + a / vv - a / vl
    return integral - p * (vv - vl)


def maxwell_coexistence(eos: VanDerWaals, maxiter: int = 200) -> CoexistencePair:
    """Vapor and liquid densities from the equal-area rule (nested bisection)."""
    if not isinstance(eos, VanDerWaals):
        raise TypeError("Maxwell construction needs a van der Waals equation of state")
    r1, r2 = spinodal_densities(eos)
    P = lambda r: r * eos.pressure(r)
    p_max, p_min = P(r1), P(r2)
    lo, hi = max(0.0, p_min), p_max
    rho_top = (1.0 - 1e-15) / eos.b

    def roots(p):
        rv = _bisect(lambda r: p - P(r), 1e-300, r1)
        rl = _bisect(lambda r: P(r) - p, r2, rho_top)
        return rv, rl

    # residual decreases with p: positive below p_sat
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= 1e-14 * hi:
            break
        rv, rl = roots(mid)
        if equal_area_residual(eos, rv, rl, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    else:
        raise MaxwellConvergenceError(f"no convergence after {maxiter} iterations")
    p = 0.5 * (lo + hi)
    rv, rl = roots(p)
    return CoexistencePair(rho_vapor=rv, rho_liquid=rl, p_sat=p)


def consistency_order(eos: Union[EquationOfState, Callable[[float], float]], n: int = 41) -> float:
    """Exponent p in |pi*(u) - pi*(0)| ~ u^p, fitted over u in [1e-3, 1e-1].

    Accepts an equation of state (evaluated at rho = 1) or a plain function of
    ``u``.  Returns ``math.inf`` when the deviation sits below round-off,
    i.e. the pressure does not depend on velocity at all.
    """
    fun = (lambda u: eos.pressure(1.0, u)) if isinstance(eos, EquationOfState) else eos
    u = np.logspace(-3, -1, n)
    p0 = fun(0.0)
    dev = np.abs(np.array([fun(x) for x in u]) - p0)
    floor = 64.0 * np.finfo(float).eps * max(abs(p0), 1e-300)
    if np.all(dev <= floor):
        return math.inf
    if np.any(dev <= floor):
        raise ValueError("deviation drops below round-off inside the fit window")
    slope, _ = np.polyfit(np.log(u), np.log(dev), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# JSON configuration

_VDW_DEFAULTS = {"a": 1.0 / 49.0, "b": 2.0 / 21.0, "R": 1.0}


def eos_from_config(cfg: dict) -> EquationOfState:
    """Build an equation of state from its JSON object.

    ``{"type": "vdw", "a": .., "b": .., "R": .., "Tr": 0.8}`` (or ``"T"``),
    ``{"type": "shallow_water", "g": ..}``, ``{"type": "ideal", "R": .., "T": ..}``,
    ``{"type": "entropic", "varsigma": ..}``.
    """
    kind = cfg["type"]
    if kind == "ideal":
        if "varsigma_rho" in cfg:
            return IdealGas.from_sound_speed(cfg["varsigma_rho"], cfg.get("R", 1.0))
        return IdealGas(R=cfg.get("R", 1.0), T=cfg.get("T", 1.0 / 3.0))
    if kind == "shallow_water":
        return ShallowWater(g=cfg.get("g", 2.0 / 3.0))
    if kind == "vdw":
        p = {k: cfg.get(k, v) for k, v in _VDW_DEFAULTS.items()}
        if ("T" in cfg) == ("Tr" in cfg):
            raise ValueError("van der Waals config needs exactly one of 'T' or 'Tr'")
        if "Tr" in cfg:
            return VanDerWaals.from_reduced(cfg["Tr"], **p)
        return VanDerWaals(T=cfg["T"], **p)
    if kind == "entropic":
        return EntropicIsothermal(varsigma=cfg.get("varsigma", VARSIGMA))
    raise ValueError(f"unknown equation of state type {kind!r}")
