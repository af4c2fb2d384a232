"""Stability-domain maps: the largest stable flow speed over (state, beta) grids.

A cell is stable at speed ``s`` when, for every velocity direction of the
protocol and every wave-vector of its k-grid, the one-step operator has
spectral radius at most ``1 + tol``.  The speed is found by bisection.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .eos import (
    EOSDomainError,
    EntropicIsothermal,
    EquationOfState,
    IdealGas,
    MaxwellConvergenceError,
    ShallowWater,
    VanDerWaals,
    maxwell_coexistence,
)
from .lattice import LatticeDescriptor, UniformState, beta_from_viscosity
from .linalg import EigenConvergenceError, spectral_radius_batch
from .spectral import collision_matrix, step_matrices


@dataclass(frozen=True)
class ScanProtocol:
    """k-grid, velocity directions and speed search for one stability scan.

    The k-grid spans ``kx_range x ky_range`` with ``ceil(width/dk) + 1``
    points per axis (end points included).  In one dimension only the x-range
    is used and the single direction is +x; the reflection c -> -c maps
    ``-u`` onto ``+u`` with ``k -> -k``, which the symmetric k-range covers.
    """

    dk: float = 0.1
    angles: tuple = tuple(np.linspace(-0.5 * np.pi, 0.5 * np.pi, 5))
    kx_range: tuple = (-np.pi, np.pi)
    ky_range: tuple = (0.0, np.pi)
    resolution: float = 1e-3
    u_search_max: float = 1.0
    tol: float = 1e-9
    chunk: int = 1024

    def __post_init__(self):
        if not self.dk > 0:
            raise ValueError("dk must be positive")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if not self.u_search_max > 0:
            raise ValueError("u_search_max must be positive")
        if len(self.angles) == 0:
            raise ValueError("at least one direction angle is required")
        if any(abs(a) > 0.5 * np.pi + 1e-12 for a in self.angles):
            raise ValueError("angles must lie in [-pi/2, pi/2]")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        object.__setattr__(self, "kx_range", tuple(float(v) for v in self.kx_range))
        object.__setattr__(self, "ky_range", tuple(float(v) for v in self.ky_range))

    @classmethod
    def paper(cls, **kw):
        """dk = 0.02 and 21 directions (steps of pi/20)."""
        return cls(dk=0.02, angles=tuple(np.linspace(-0.5 * np.pi, 0.5 * np.pi, 21)), **kw)

    @classmethod
    def coarse(cls, **kw):
        return cls(**kw)

    @classmethod
    def preset(cls, name: str, **kw):
        if name == "paper":
            return cls.paper(**kw)
        if name == "coarse":
            return cls.coarse(**kw)
        raise ValueError(f"unknown preset {name!r}")

    def _axis(self, lo, hi):
        n = int(math.ceil((hi - lo) / self.dk - 1e-9)) + 1
        return np.linspace(lo, hi, max(n, 2))

    def k_grid(self, D: int) -> np.ndarray:
        """Wave-vectors, shape (n, D)."""
        kx = self._axis(*self.kx_range)
        if D == 1:
            return kx[:, None]
        if D == 2:
            ky = self._axis(*self.ky_range)
            KX, KY = np.meshgrid(kx, ky, indexing="ij")
            return np.stack([KX.ravel(), KY.ravel()], axis=1)
        raise ValueError("scans are implemented for D = 1 and 2")

    def directions(self, D: int) -> np.ndarray:
        if D == 1:
            return np.array([[1.0]]), np.array([0.0])
        a = np.asarray(self.angles)
        return np.stack([np.cos(a), np.sin(a)], axis=1), a

    def to_dict(self):
        return asdict(self)


@dataclass
class StableVelocity:
    """Result of one speed search, with the limiting direction and wave-vector."""

    u_max: float
    limiting_angle: float = math.nan
    limiting_k: tuple = (math.nan, math.nan)
    rest_stable: bool = True
    monotone: bool = True
    evaluations: int = 0


class _Probe:
    """Spectral-radius test of a velocity against the whole k-grid."""

    def __init__(self, lat, eos, rho, beta, protocol, beta_of_u=None):
        self.lat, self.eos, self.rho, self.beta = lat, eos, rho, beta
        self.protocol = protocol
        self.ks = protocol.k_grid(lat.D)
        self.beta_of_u = beta_of_u
        self.count = 0

    def __call__(self, u):
        """(stable, worst k) for velocity vector ``u``; stops at the first unstable chunk."""
        self.count += 1
        beta = self.beta if self.beta_of_u is None else self.beta_of_u(u)
        try:
            C = collision_matrix(self.lat, self.eos, UniformState(self.rho, tuple(u), beta))
        except EOSDomainError:
            return False, None
        thr = 1.0 + self.protocol.tol
        n = len(self.ks)
        for s in range(0, n, self.protocol.chunk):
            ks = self.ks[s : s + self.protocol.chunk]
            rad = spectral_radius_batch(step_matrices(self.lat, C, ks))
            i = int(np.argmax(rad))
            if rad[i] > thr:
                return False, ks[i]
        return True, None


def _pad_k(k, D):
    if k is None:
        return (math.nan, math.nan)
    k = [float(v) for v in np.asarray(k, dtype=float)]
    return tuple(k + [0.0] * (2 - D)) if D < 2 else tuple(k[:2])


def max_stable_velocity(
    lat: LatticeDescriptor, eos: EquationOfState, rho: float, beta: float, protocol: ScanProtocol | None = None
) -> StableVelocity:
    """Largest speed (to ``protocol.resolution``) stable in every direction.

    Directions are visited in order against a running upper bound: a
    direction that is stable at the current bound cannot lower it, so only
    failing directions trigger a bisection.  A final sweep checks stability at
    ``u_max`` in every direction and instability at ``u_max + resolution`` in
    the limiting one; if ``u_max`` fails the check the speed is stepped down
    and the result is marked non-monotone.
    """
    protocol = protocol or ScanProtocol()
    probe = _Probe(lat, eos, rho, beta, protocol)
    dirs, angles = protocol.directions(lat.D)
    res = protocol.resolution

    ok, kbad = probe(np.zeros(lat.D))
    if not ok:
        return StableVelocity(0.0, math.nan, _pad_k(kbad, lat.D), rest_stable=False, evaluations=probe.count)

    bound = protocol.u_search_max
    lim_angle, lim_k = math.nan, None
    for d, a in zip(dirs, angles):
        ok, kbad = probe(bound * d)
        if ok:
            continue
        lo, hi, k_hi = 0.0, bound, kbad
        while hi - lo > res:
            mid = 0.5 * (lo + hi)
            ok, kb = probe(mid * d)
            if ok:
                lo = mid
            else:
                hi, k_hi = mid, kb
        bound, lim_angle, lim_k = lo, float(a), k_hi

    # guard sweep
    monotone = True
    s = bound
    while s > 0.0:
        bad = None
        for d, a in zip(dirs, angles):
            ok, kb = probe(s * d)
            if not ok:
                bad = (a, kb)
                break
        if bad is None:
            break
        monotone = False
        lim_angle, lim_k = float(bad[0]), bad[1]
        s = max(0.0, s - res)
    if monotone and s < protocol.u_search_max and not math.isnan(lim_angle):
        d = dirs[list(angles).index(lim_angle)] if lat.D > 1 else dirs[0]
        ok, _ = probe(min(s + res, protocol.u_search_max) * d)
        monotone = not ok
    return StableVelocity(
        u_max=float(s),
        limiting_angle=lim_angle,
        limiting_k=_pad_k(lim_k, lat.D),
        rest_stable=True,
        monotone=monotone,
        evaluations=probe.count,
    )


# ---------------------------------------------------------------------------
# EoS families


@dataclass(frozen=True)
class FamilyMember:
    """One row of a stability map: the family parameter and the state it yields."""

    param: float
    eos: EquationOfState | None
    rho: float
    error: str | None = None

    @property
    def varsigma_rho(self) -> float:
        if self.eos is None:
            return math.nan
        try:
            return float(self.eos.sound_speed(self.rho))
        except EOSDomainError:
            return math.nan


def ideal_family(varsigma_rhos, R=1.0):
    """Ideal gas at unit density, parametrised by its sound speed."""
    return [FamilyMember(float(s), IdealGas.from_sound_speed(float(s), R), 1.0) for s in varsigma_rhos]


def ideal_family_from_temperature(temperatures, R=1.0):
    return [FamilyMember(float(T), IdealGas(R=R, T=float(T)), 1.0) for T in temperatures]


def shallow_water_family(rhos, g=2.0 / 3.0):
    """Shallow water at fixed g, parametrised by the column height rho."""
    return [FamilyMember(float(r), ShallowWater(g=g), float(r)) for r in rhos]


def vdw_saturation_family(Tr_values, a=1.0 / 49.0, b=2.0 / 21.0, R=1.0):
    """van der Waals on the liquid branch of the saturation curve."""
    out = []
    for Tr in Tr_values:
        eos = VanDerWaals.from_reduced(float(Tr), a=a, b=b, R=R)
        try:
            rho = maxwell_coexistence(eos).rho_liquid
        except (EOSDomainError, MaxwellConvergenceError) as exc:
            out.append(FamilyMember(float(Tr), None, math.nan, error=str(exc)))
            continue
        out.append(FamilyMember(float(Tr), eos, rho))
    return out


# ---------------------------------------------------------------------------
# grids


@dataclass
class StabilityDomainGrid:
    params: np.ndarray
    varsigma_rho: np.ndarray
    betas: np.ndarray
    u_max: np.ndarray  # (n_param, n_beta), NaN for failed cells
    limiting_k: np.ndarray  # (n_param, n_beta, 2)
    limiting_angle: np.ndarray
    monotone: np.ndarray
    errors: dict = field(default_factory=dict)

    CSV_COLUMNS = ("param", "varsigma_rho", "beta", "u_max", "limiting_kx", "limiting_ky", "limiting_angle")

    def rows(self):
        for i, p in enumerate(self.params):
            for j, b in enumerate(self.betas):
                yield (
                    p,
                    self.varsigma_rho[i],
                    b,
                    self.u_max[i, j],
                    self.limiting_k[i, j, 0],
                    self.limiting_k[i, j, 1],
                    self.limiting_angle[i, j],
                )


def _cell(args):
    lat, member, beta, protocol = args
    if member.eos is None:
        return None, member.error
    try:
        return max_stable_velocity(lat, member.eos, member.rho, beta, protocol), None
    except (EOSDomainError, EigenConvergenceError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover
        return os.cpu_count() or 1


def stability_domain(
    lat: LatticeDescriptor, family, beta_grid, protocol: ScanProtocol | None = None, threads: int | None = None
) -> StabilityDomainGrid:
    """u_max over (family member, beta).

    Cells are independent; with ``threads > 1`` they are farmed out to a
    process pool and collected in submission order, so the result does not
    depend on the schedule.  Failing cells are stored as NaN with the error
    message in ``errors[(i, j)]``.
    """
    protocol = protocol or ScanProtocol()
    family = list(family)
    betas = np.asarray(beta_grid, dtype=float)
    tasks = [(lat, m, float(b), protocol) for m in family for b in betas]
    threads = default_workers() if threads is None else threads
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cell, tasks, chunksize=1))
    else:
        results = [_cell(t) for t in tasks]

    n, m = len(family), len(betas)
    u = np.full((n, m), np.nan)
    kk = np.full((n, m, 2), np.nan)
    ang = np.full((n, m), np.nan)
    mono = np.ones((n, m), dtype=bool)
    errors = {}
    for idx, (r, err) in enumerate(results):
        i, j = divmod(idx, m)
        if r is None:
            errors[(i, j)] = err
            continue
        u[i, j] = r.u_max
        kk[i, j] = r.limiting_k
        ang[i, j] = r.limiting_angle
        mono[i, j] = r.monotone
    return StabilityDomainGrid(
        params=np.array([mb.param for mb in family]),
        varsigma_rho=np.array([mb.varsigma_rho for mb in family]),
        betas=betas,
        u_max=u,
        limiting_k=kk,
        limiting_angle=ang,
        monotone=mono,
        errors=errors,
    )


# ---------------------------------------------------------------------------
# velocity-dependent pressure


def _entropic_beta(eos, nu):
    def beta_of_u(u):
        pi = float(np.mean([eos.pressure(1.0, ua) for ua in u]))
        return beta_from_viscosity(nu, pi)

    return beta_of_u


def _entropic_task(args):
    lat, eos, nu, u, protocol = args
    probe = _Probe(lat, eos, 1.0, None, protocol, beta_of_u=_entropic_beta(eos, nu))
    return probe(np.asarray(u, dtype=float))[0]


def entropic_domain(
    lat: LatticeDescriptor,
    nu: float,
    u_grid,
    protocol: ScanProtocol | None = None,
    eos: EquationOfState | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Stability flag at every velocity of ``u_grid`` (shape (..., D)).

    Viscosity is the controlled variable: at each velocity beta is recovered
    from ``nu`` with the pressure evaluated at that velocity (the mean of the
    per-axis pressures when they differ).
    """
    protocol = protocol or ScanProtocol()
    eos = eos or EntropicIsothermal()
    u_grid = np.asarray(u_grid, dtype=float)
    flat = u_grid.reshape(-1, lat.D)
    tasks = [(lat, eos, nu, u, protocol) for u in flat]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            flags = list(pool.map(_entropic_task, tasks, chunksize=4))
    else:
        flags = [_entropic_task(t) for t in tasks]
    return np.array(flags, dtype=bool).reshape(u_grid.shape[:-1])
