"""Small periodic LBGK simulator for checking the linear spectra in time."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .eos import EOSDomainError, EquationOfState
from .lattice import LatticeDescriptor, UniformState, equilibrium, equilibrium_field, moments
from .spectral import step_operator
from .linalg import eigvals, eigvec

MAX_AMPLITUDE = 1e-4
OVERFLOW_RATIO = 1e16
LINEAR_LIMIT = 1e-3  # largest perturbation amplitude, relative to rho, kept in a fit
FLOOR_RATIO = 1e-14


@dataclass(frozen=True)
class PopulationField:
    """Populations ``f`` of shape (Q, N_1, ..., N_D) on a periodic grid."""

    f: np.ndarray
    lat: LatticeDescriptor
    eos: EquationOfState
    beta: float

    @property
    def shape(self):
        return self.f.shape[1:]

    def moments(self):
        return moments(self.lat, self.f)

    def mass(self) -> float:
        return float(np.sum(self.f))

    def momentum(self) -> np.ndarray:
        c = self.lat.velocities.T.astype(float)
        return np.tensordot(c, self.f, axes=(1, 0)).reshape(self.lat.D, -1).sum(axis=1)


def _positions(shape):
    return np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")


def wave_vector(grid, k_index) -> np.ndarray:
    """Grid wave-vector ``2 pi k_index / N`` per axis."""
    grid = tuple(int(n) for n in np.atleast_1d(grid))
    idx = np.atleast_1d(np.asarray(k_index, dtype=int))
    if idx.shape != (len(grid),):
        raise ValueError(f"k_index must have {len(grid)} components")
    if np.any(np.abs(idx) > np.array(grid) // 2):
        raise ValueError(f"k_index {tuple(idx)} beyond the Nyquist index of grid {grid}")
    return 2.0 * np.pi * idx / np.array(grid, dtype=float)


def dominant_mode(lat, eos, state: UniformState, k_vec):
    """Eigenvalue of largest modulus of L(k) and its eigenvector (max-norm 1)."""
    op = step_operator(lat, eos, state, k_vec)
    lam = eigvals(op.matrix)
    i = int(np.argmax(np.abs(lam)))
    v = eigvec(op.matrix, lam[i])
    v = v / v[np.argmax(np.abs(v))]
    return lam[i], v


def init_perturbed(
    lat: LatticeDescriptor,
    eos: EquationOfState,
    state: UniformState,
    grid,
    k_index,
    amplitude: float = 1e-6,
) -> PopulationField:
    """Uniform equilibrium plus ``amplitude * Re[v exp(i k.r)]``.

    ``v`` is the eigenvector of the least stable mode of L(k).
    """
    grid = tuple(int(n) for n in np.atleast_1d(grid))
    if len(grid) != lat.D:
        raise ValueError(f"grid must have {lat.D} axes")
    if amplitude > MAX_AMPLITUDE * state.rho:
        raise ValueError(f"amplitude {amplitude} exceeds the linear-regime bound {MAX_AMPLITUDE} * rho")
    k = wave_vector(grid, k_index)
    feq = equilibrium(lat, eos, state.rho, state.velocity).f_eq
    f = np.broadcast_to(feq.reshape((lat.Q,) + (1,) * lat.D), (lat.Q,) + grid).copy()
    if amplitude != 0.0:
        _, v = dominant_mode(lat, eos, state, k)
        phase = np.exp(1j * sum(ka * xa for ka, xa in zip(k, _positions(grid))))
        f += amplitude * np.real(v.reshape((lat.Q,) + (1,) * lat.D) * phase)
    return PopulationField(f, lat, eos, state.beta)


def _bad_sites(eos, rho):
    bad = []
    for idx in zip(*np.nonzero(np.ones_like(rho, dtype=bool))):
        try:
            eos.pressure(float(rho[idx]))
        except EOSDomainError:
            bad.append(tuple(int(i) for i in idx))
        if len(bad) >= 10:
            break
    return bad


def collide(field: PopulationField) -> np.ndarray:
    lat = field.lat
    rho, u = moments(lat, field.f)
    try:
        feq = equilibrium_field(lat, field.eos, rho, u)
    except EOSDomainError as exc:
        sites = _bad_sites(field.eos, rho)
        raise EOSDomainError(f"equation of state invalid at sites {sites}: {exc}") from exc
    return field.f + 2.0 * field.beta * (feq - field.f)


def stream(lat: LatticeDescriptor, f: np.ndarray) -> np.ndarray:
    """Move population i by c_i with periodic wrap."""
    out = np.empty_like(f)
    axes = tuple(range(lat.D))
    for i, c in enumerate(lat.velocities):
        out[i] = np.roll(f[i], shift=tuple(int(v) for v in c), axis=axes)
    return out


def step(field: PopulationField) -> PopulationField:
    """One LBGK update: collide, then stream."""
    return replace(field, f=stream(field.lat, collide(field)))


@dataclass
class GrowthMeasurement:
    sigma: float  # d ln E / dt
    predicted: float  # 2 ln |lambda_max|
    k_vec: np.ndarray
    residual: float
    steps: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)
    fitted_rate: np.ndarray = field(repr=False)
    terminated_early: bool = False

    @property
    def unstable(self) -> bool:
        return self.sigma > 0.0

    @property
    def relative_error(self) -> float:
        if self.predicted == 0.0:
            return abs(self.sigma)
        return abs(self.sigma - self.predicted) / abs(self.predicted)

    def rows(self):
        return zip(self.steps, self.energy, self.fitted_rate)


def _running_slope(t, y):
    """Least-squares slope of y(t) over every prefix (NaN for fewer than 2 points)."""
    n = np.arange(1, len(t) + 1, dtype=float)
    st, sy = np.cumsum(t), np.cumsum(y)
    stt, sty = np.cumsum(t * t), np.cumsum(t * y)
    den = n * stt - st * st
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, (n * sty - st * sy) / np.where(den > 0, den, 1.0), np.nan)


def measure_growth(
    lat: LatticeDescriptor,
    eos: EquationOfState,
    state: UniformState,
    grid,
    k_index,
    n_steps: int = 400,
    amplitude: float = 1e-6,
) -> GrowthMeasurement:
    """Fit the exponential rate of E(t) = sum |f - f_eq(rho, u)|^2.

    The run stops early once the perturbation amplitude passes
    ``LINEAR_LIMIT * rho`` (E grown by at most ``OVERFLOW_RATIO``), or once E
    has decayed below ``FLOOR_RATIO`` of its initial value, where round-off
    takes over.  The fit uses every recorded step.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    fld = init_perturbed(lat, eos, state, grid, k_index, amplitude)
    k = wave_vector(grid, k_index)
    lam = eigvals(step_operator(lat, eos, state, k).matrix)
    predicted = 2.0 * math.log(float(np.max(np.abs(lam))))
    base = equilibrium(lat, eos, state.rho, state.velocity).f_eq.reshape((lat.Q,) + (1,) * lat.D)

    def energy(f):
        return float(np.sum((f - base) ** 2))

    steps, E = [0], [energy(fld.f)]
    cap = OVERFLOW_RATIO
    if amplitude > 0:
        cap = min(cap, (LINEAR_LIMIT * state.rho / amplitude) ** 2)
    early = False
    for n in range(1, n_steps + 1):
        try:
            fld = step(fld)
        except (EOSDomainError, FloatingPointError, ValueError):
            early = True
            break
        e = energy(fld.f)
        if not math.isfinite(e) or e > cap * E[0]:
            early = True
            break
        steps.append(n)
        E.append(e)
        if E[0] > 0 and e < FLOOR_RATIO * E[0]:
            break
    t = np.asarray(steps, dtype=float)
    E = np.asarray(E)
    with np.errstate(divide="ignore"):
        y = np.log(E)
    ok = np.isfinite(y)
    if ok.sum() >= 2:
        coef = np.polyfit(t[ok], y[ok], 1)
        sigma = float(coef[0])
        resid = float(np.sqrt(np.mean((np.polyval(coef, t[ok]) - y[ok]) ** 2)))
    else:
        sigma, resid = (math.inf if early else math.nan), math.nan
    rate = _running_slope(t, np.where(ok, y, 0.0))
    return GrowthMeasurement(sigma, predicted, k, resid, t.astype(int), E, rate, early)
