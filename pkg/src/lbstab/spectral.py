"""Exact linear analysis of the discrete LBGK map.

A Fourier mode ``f(r, t) = f_hat(t) exp(i k.r)`` evolves by
``f_hat(t+1) = L(k) f_hat(t)`` with ``L(k) = diag(exp(-i k.c)) [(1-2beta) I + 2beta J]``
and ``J`` the Jacobian of the equilibrium with respect to the populations.
Frequencies are ``omega = i Ln(lambda)``, so ``Im(omega) = ln|lambda|`` is the
growth rate per step (negative for decaying modes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .eos import EquationOfState
from .hydro import lbgk_hydro_spectrum
from .lattice import DPSI_DP, DPSI_DU, LatticeDescriptor, UniformState, equilibrium
from .linalg import eigvals, eigvec, spectral_radius_batch

STABILITY_TOL = 1e-9
AMBIGUITY_TOL = 1e-9
HYDRO_LABELS_1D = ("ac+", "ac-")
HYDRO_LABELS_2D = ("shear", "ac+", "ac-")
KINETIC = "kinetic"


def equilibrium_jacobian(lat: LatticeDescriptor, eos: EquationOfState, rho: float, u) -> np.ndarray:
    """J_ij = d f_i^eq / d f_j at the uniform state, through (rho, u)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    eq = equilibrium(lat, eos, rho, u)
    psi = eq.psi
    idx = lat.index
    Q, D = lat.Q, lat.D
    dP_drho = np.array([eos.dpressure_drho(rho, ua) for ua in u])
    dP_du = np.array([eos.dpressure_du(rho, ua) for ua in u]) + 2.0 * u

    # product over the other axes, computed directly (psi may vanish)
    others = np.ones((Q, D))
    for a in range(D):
        for b in range(D):
            if b != a:
                others[:, a] *= psi[b, idx[:, b]]
    df_drho = eq.f_eq / rho
    df_du = np.empty((Q, D))
    for a in range(D):
        df_drho = df_drho + rho * DPSI_DP[idx[:, a]] * dP_drho[a] * others[:, a]
        df_du[:, a] = rho * (DPSI_DU[idx[:, a]] + DPSI_DP[idx[:, a]] * dP_du[a]) * others[:, a]
    c = lat.velocities.astype(float)
    J = np.repeat(df_drho[:, None], Q, axis=1)
    for a in range(D):
        J += df_du[:, a][:, None] * ((c[:, a] - u[a]) / rho)[None, :]
    return J


def collision_matrix(lat: LatticeDescriptor, eos: EquationOfState, state: UniformState) -> np.ndarray:
    J = equilibrium_jacobian(lat, eos, state.rho, state.velocity)
    return (1.0 - 2.0 * state.beta) * np.eye(lat.Q) + 2.0 * state.beta * J


def phases(lat: LatticeDescriptor, k_vecs) -> np.ndarray:
    """exp(-i k.c_i) for a stack of wave-vectors, shape (..., Q)."""
    k = np.asarray(k_vecs, dtype=float)
    if k.shape[-1] != lat.D:
        k = k[..., : lat.D]
    return np.exp(-1j * (k @ lat.velocities.T.astype(float)))


def step_matrices(lat: LatticeDescriptor, C: np.ndarray, k_vecs) -> np.ndarray:
    ph = phases(lat, k_vecs)
    return ph[..., :, None] * C


@dataclass(frozen=True)
class StepOperator:
    matrix: np.ndarray
    lattice: LatticeDescriptor
    eos: EquationOfState
    state: UniformState
    k_vec: np.ndarray


def step_operator(lat: LatticeDescriptor, eos: EquationOfState, state: UniformState, k_vec) -> StepOperator:
    k_vec = np.atleast_1d(np.asarray(k_vec, dtype=float))
    if np.any(np.abs(k_vec) > np.pi + 1e-12):
        raise ValueError(f"wave-vector {k_vec} outside the first Brillouin zone")
    C = collision_matrix(lat, eos, state)
    return StepOperator(step_matrices(lat, C, k_vec), lat, eos, state, k_vec)


def eigenvalues(op) -> np.ndarray:
    m = op.matrix if isinstance(op, StepOperator) else op
    return eigvals(m)


def frequencies(lam) -> np.ndarray:
    """omega = i Ln(lambda), principal branch with Re(omega) in (-pi, pi]."""
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        ln = np.log(lam)
    re = -ln.imag
    re = np.where(re <= -np.pi, re + 2.0 * np.pi, re)
    out = np.empty(lam.shape, dtype=complex)
    out.real, out.imag = re, ln.real
    return out


def to_growth_convention(omega):
    """Flip a dissipation-positive frequency into this module's convention."""
    return np.conj(omega)


def spectral_radii(lat, eos, state: UniformState, k_vecs) -> np.ndarray:
    C = collision_matrix(lat, eos, state)
    return spectral_radius_batch(step_matrices(lat, C, k_vecs))


@dataclass
class SpectrumResult:
    k_vec: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    spectral_radius: float
    stable: bool
    labels: list = field(default_factory=list)
    ambiguous: bool = False
    vectors: np.ndarray | None = field(default=None, repr=False)

    def mode(self, label):
        return self.omega[self.labels.index(label)]


def _hydro_labels(D):
    return HYDRO_LABELS_1D if D == 1 else HYDRO_LABELS_2D


def _predicted(lat, eos, state, k_vec):
    sh, ap, am = lbgk_hydro_spectrum(state.rho, state.velocity, eos, state.beta, k_vec)
    pred = [ap, am] if lat.D == 1 else [sh, ap, am]
    return [to_growth_convention(p) for p in pred]


def _label_by_prediction(omega, pred, names):
    """Assign hydrodynamic names to the eigenvalues nearest the predictions."""
    finite = np.where(np.isfinite(omega), omega, 1e300)
    cost = np.abs(finite[None, :] - np.asarray(pred)[:, None])
    rows, cols = linear_sum_assignment(cost)
    labels = [KINETIC] * len(omega)
    ambiguous = False
    for r, c in zip(rows, cols):
        labels[c] = names[r]
        d = np.sort(cost[r])
        if len(d) > 1 and d[1] - d[0] <= AMBIGUITY_TOL:
            ambiguous = True
    return labels, ambiguous


def _eigensystem(matrix):
    lam = eigvals(matrix)
    vecs = np.stack([eigvec(matrix, l) for l in lam], axis=1)
    return lam, vecs


def _result(k_vec, matrix, tol, labels=None, ambiguous=False, with_vectors=True):
    lam, vecs = _eigensystem(matrix) if with_vectors else (eigvals(matrix), None)
    rad = float(np.max(np.abs(lam)))
    return SpectrumResult(
        k_vec=np.asarray(k_vec, dtype=float),
        lam=lam,
        omega=frequencies(lam),
        spectral_radius=rad,
        stable=rad <= 1.0 + tol,
        labels=labels or [],
        ambiguous=ambiguous,
        vectors=vecs,
    )


def _track(prev: SpectrumResult, cur: SpectrumResult):
    """Carry labels from ``prev`` to ``cur`` by maximal eigenvector overlap."""
    ov = np.abs(prev.vectors.conj().T @ cur.vectors)
    rows, cols = linear_sum_assignment(-ov)
    labels = [KINETIC] * len(cur.lam)
    ambiguous = False
    for r, c in zip(rows, cols):
        labels[c] = prev.labels[r]
        if prev.labels[r] != KINETIC:
            o = np.sort(ov[r])[::-1]
            if len(o) > 1 and o[0] - o[1] <= AMBIGUITY_TOL:
                # overlap cannot decide; fall back to the nearest eigenvalue
                ambiguous = True
    if ambiguous:
        hydro = [i for i, l in enumerate(prev.labels) if l != KINETIC]
        pred = [prev.omega[i] for i in hydro]
        names = [prev.labels[i] for i in hydro]
        labels, _ = _label_by_prediction(cur.omega, pred, names)
    cur.labels = labels
    cur.ambiguous = ambiguous
    return cur


SMALL_K = 0.05


def spectrum(
    lat: LatticeDescriptor, eos: EquationOfState, state: UniformState, k_vec, tol: float = STABILITY_TOL
) -> SpectrumResult:
    """Eigenvalues, frequencies and hydrodynamic labels of L(k).

    Wave-vectors shorter than ``SMALL_K`` are labelled by matching the
    Chapman-Enskog predictions; longer ones by continuation along the ray
    from the origin.
    """
    k_vec = np.atleast_1d(np.asarray(k_vec, dtype=float))
    kn = float(np.linalg.norm(k_vec))
    C = collision_matrix(lat, eos, state)
    names = _hydro_labels(lat.D)
    if kn == 0.0:
        res = _result(k_vec, step_matrices(lat, C, k_vec), tol)
        res.labels = [KINETIC] * lat.Q
        for i in np.argsort(np.abs(res.lam - 1.0))[: 1 + lat.D]:
            res.labels[i] = "conserved"
        return res
    if kn <= SMALL_K:
        res = _result(k_vec, step_matrices(lat, C, k_vec), tol)
        res.labels, res.ambiguous = _label_by_prediction(res.omega, _predicted(lat, eos, state, k_vec), names)
        return res
    n = int(np.ceil(kn / SMALL_K))
    path = [k_vec * (SMALL_K / kn) * 0.5] + [k_vec * t for t in np.linspace(0, 1, n + 1)[1:]]
    return _along(lat, eos, state, C, path, tol)[-1]


def _along(lat, eos, state, C, path, tol):
    names = _hydro_labels(lat.D)
    first = _result(path[0], step_matrices(lat, C, path[0]), tol)
    first.labels, first.ambiguous = _label_by_prediction(first.omega, _predicted(lat, eos, state, path[0]), names)
    out = [first]
    for k in path[1:]:
        cur = _result(k, step_matrices(lat, C, k), tol)
        out.append(_track(out[-1], cur))
    return out


def dispersion_curve(lat: LatticeDescriptor, eos: EquationOfState, state: UniformState, k_path, tol=STABILITY_TOL):
    """Spectra along ``k_path`` with labels tracked from the shortest wave-vector.

    Tracking starts at the point nearest the origin and proceeds outwards in
    both directions, so the labels do not depend on the path orientation.
    """
    k_path = [np.atleast_1d(np.asarray(k, dtype=float)) for k in k_path]
    norms = np.array([np.linalg.norm(k) for k in k_path])
    if np.any(norms < 1e-4):
        raise ValueError("k_path must stay away from the origin (|k| >= 1e-4)")
    C = collision_matrix(lat, eos, state)
    a = int(np.argmin(norms))
    fwd = _along(lat, eos, state, C, k_path[a:], tol)
    bwd = _along(lat, eos, state, C, k_path[a::-1], tol)
    return bwd[::-1][:-1] + fwd


def d1q3_collision_from_modes(u, s2, beta):
    """D1Q3 collision matrices from (u, varsigma_rho^2) arrays, shape (..., 3, 3).

    The D1Q3 equilibrium Jacobian depends on the state only through the
    velocity and d(rho pi*)/d rho, which makes a direct parametrisation by the
    eigen-modes possible (including varsigma_rho = 0).
    """
    u = np.asarray(u, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    c = np.array([-1.0, 0.0, 1.0])
    psi0 = np.stack([-0.5 * u, np.ones_like(u), 0.5 * u], axis=-1)  # Psi at P = 0
    base = psi0 + DPSI_DP * (s2 + u * u)[..., None]
    slope = DPSI_DU + DPSI_DP * (2.0 * u)[..., None]
    J = base[..., :, None] + slope[..., :, None] * (c - u[..., None])[..., None, :]
    eye = np.eye(3)
    return (1.0 - 2.0 * beta) * eye + 2.0 * beta * J
