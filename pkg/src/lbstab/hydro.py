"""Hydrodynamic limit of the LBGK model in closed form.

Sign convention: the Navier-Stokes and Chapman-Enskog frequencies returned
here carry dissipation as a *positive* imaginary part, exactly as in the
target relations ``omega = k.u + i nu k^2``.  The discrete spectra in
:mod:`lbstab.spectral` use ``omega = i ln(lambda)``, for which decay is a
negative imaginary part; use :func:`lbstab.spectral.to_growth_convention`
to compare the two.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .eos import EquationOfState, NonHyperbolicError, VARSIGMA
from .lattice import bulk_viscosity, viscosity_from_beta
from .linalg import eigvals

CS2 = VARSIGMA**2
BOUNDARY_TOL = 1e-12


class DegenerateModesError(ValueError):
    """c+ == c-: the attenuation rates are undefined."""


@dataclass(frozen=True)
class HydroModes:
    c_plus: float
    c_minus: float
    varsigma_rho: float
    R_plus: float
    R_minus: float
    A: float
    B: float


@dataclass(frozen=True)
class DeviationTensors:
    A_prime_diag: np.ndarray
    B_diag: np.ndarray


@dataclass(frozen=True)
class NSTargetSpectrum:
    omega_shear: complex
    omega_ac_plus: complex
    omega_ac_minus: complex

    def as_tuple(self):
        return (self.omega_shear, self.omega_ac_plus, self.omega_ac_minus)


def eigen_modes(eos: EquationOfState, rho, u):
    """Characteristic speeds (c+, c-) of the Euler system along one axis.

    Includes the velocity dependence of the pressure; reduces to
    ``u +- varsigma_rho`` when pi* does not depend on u.
    """
    dpu = eos.dpressure_du(rho, u)
    s2 = eos.sound_speed_squared(rho, u)
    rad = 0.25 * dpu * dpu + s2
    if np.any(np.asarray(rad) < 0.0):
        raise NonHyperbolicError(f"negative radicand {rad} in the eigen-mode speeds")
    root = np.sqrt(rad)
    centre = u + 0.5 * dpu
    return centre + root, centre - root


def attenuation_rates(c_plus, c_minus):
    dc = np.asarray(c_plus - c_minus)
    if np.any(dc == 0.0):
        raise DegenerateModesError("attenuation rates need c+ != c-")
    r_p = c_plus * (3.0 * CS2 - c_plus**2) / (CS2 * dc)
    r_m = -c_minus * (3.0 * CS2 - c_minus**2) / (CS2 * dc)
    return r_p, r_m


def ce_coefficients_1d(c_plus, c_minus):
    """Viscosity factor A and compressibility error B."""
    A = (3.0 * CS2 - c_plus**2 - c_minus**2 - c_plus * c_minus) / (2.0 * CS2)
    B = 1.5 * CS2 * (c_plus + c_minus) - 0.5 * (c_plus**3 + c_minus**3)
    return A, B


def hydro_modes(eos: EquationOfState, rho, u) -> HydroModes:
    cp, cm = eigen_modes(eos, rho, u)
    rp, rm = attenuation_rates(cp, cm)
    A, B = ce_coefficients_1d(cp, cm)
    return HydroModes(
        c_plus=cp,
        c_minus=cm,
        varsigma_rho=float(np.sqrt(eos.sound_speed_squared(rho, u))),
        R_plus=rp,
        R_minus=rm,
        A=A,
        B=B,
    )


def deviation_tensors(eos: EquationOfState, rho, u) -> DeviationTensors:
    """Diagonals of the deviation of the LBGK stress from Navier-Stokes."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    pi = np.array([eos.pressure(rho, ua) for ua in u])
    s2 = np.array([eos.sound_speed_squared(rho, ua) for ua in u])
    A_p = -(3.0 * u**2 + 3.0 * (pi - CS2)) / CS2
    B = -(u**3) - 3.0 * u * (s2 - CS2)
    return DeviationTensors(A_prime_diag=A_p, B_diag=B)


def hydro_stability_d1q3(c_plus, c_minus, tol=BOUNDARY_TOL):
    """0 <= c+ <= 1 and -1 <= c- <= 0 (closed, up to ``tol``)."""
    return (
        (c_plus >= -tol) & (c_plus <= 1.0 + tol) & (c_minus >= -1.0 - tol) & (c_minus <= tol)
    )


def schur_conditions_d1q3(c_plus, c_minus, k):
    """Left-hand sides of the two non-trivial Schur conditions (both must be <= 0)."""
    cp2, cm2 = c_plus**2, c_minus**2
    x = np.cos(0.5 * np.asarray(k)) ** 2
    g2 = c_plus * c_minus * (cp2 - 1.0) * (cm2 - 1.0)
    g3 = c_plus * c_minus - x + (cm2 + cp2) * x + cm2 * cp2 * (1.0 - x)
    return g2, g3


def schur_stability_d1q3(c_plus, c_minus, k, tol=BOUNDARY_TOL):
    g2, g3 = schur_conditions_d1q3(c_plus, c_minus, k)
    return (g2 <= tol) & (g3 <= tol)


def schur_stability_all_k(c_plus, c_minus, k_grid=None, tol=BOUNDARY_TOL):
    """Schur stability for every wave-number.

    The k-dependent condition is affine in cos^2(k/2), so k = 0 and k = pi
    decide it; ``k_grid`` adds further points as a cross-check.
    """
    ks = [0.0, np.pi] if k_grid is None else np.concatenate([[0.0, np.pi], np.asarray(k_grid, float)])
    out = schur_stability_d1q3(c_plus, c_minus, ks[0], tol)
    for k in ks[1:]:
        out = out & schur_stability_d1q3(c_plus, c_minus, k, tol)
    return out


def modes_from_state(u, varsigma_rho):
    """(c+, c-) from (u, varsigma_rho) for a velocity independent pressure."""
    return u + varsigma_rho, u - varsigma_rho


def state_from_modes(c_plus, c_minus):
    """Inverse of :func:`modes_from_state`: ``u`` and ``varsigma_rho^2``."""
    u = 0.5 * (c_plus + c_minus)
    return u, -(c_plus - u) * (c_minus - u)


def hydro_stable_band(eos: EquationOfState, rho, u_lo=-1.0, u_hi=1.0, n=2001, tol=1e-13):
    """Velocity interval on which the 1D hydrodynamic condition holds.

    Samples ``[u_lo, u_hi]`` and refines both edges of the stable run that
    contains (or is closest to) ``u = 0`` by bisection.  Returns ``None`` when
    no sample is stable.
    """

    def ok(v):
        try:
            cp, cm = eigen_modes(eos, rho, v)
        except NonHyperbolicError:
            return False
        return bool(hydro_stability_d1q3(cp, cm, tol=0.0))

    us = np.linspace(u_lo, u_hi, n)
    flags = np.array([ok(v) for v in us])
    if not flags.any():
        return None
    idx = np.flatnonzero(flags)
    centre = idx[np.argmin(np.abs(us[idx]))]
    i = centre
    while i > 0 and flags[i - 1]:
        i -= 1
    j = centre
    while j < n - 1 and flags[j + 1]:
        j += 1

    def refine(good, bad):
        while abs(bad - good) > tol:
            mid = 0.5 * (good + bad)
            if ok(mid):
                good = mid
            else:
                bad = mid
        return good

    lo = us[i] if i == 0 else refine(us[i], us[i - 1])
    hi = us[j] if j == n - 1 else refine(us[j], us[j + 1])
    return lo, hi


# ---------------------------------------------------------------------------
# target and CE-predicted spectra


def ns_target_spectrum(rho, u, eos: EquationOfState, nu, eta, k_vec) -> NSTargetSpectrum:
    k_vec = np.asarray(k_vec, dtype=float)
    u = np.asarray(u, dtype=float)
    k = float(np.linalg.norm(k_vec))
    ku = float(k_vec @ u)
    s = float(eos.sound_speed(rho))
    damp = 0.5 * (nu + eta) * k * k
    return NSTargetSpectrum(
        omega_shear=complex(ku, nu * k * k),
        omega_ac_plus=complex(ku + k * s, damp),
        omega_ac_minus=complex(ku - k * s, damp),
    )


def ns_matrix(rho, u, eos: EquationOfState, nu, eta, k_vec):
    """3x3 linearised Navier-Stokes operator for (rho', u_x', u_y')."""
    kx, ky = (float(v) for v in k_vec)
    ku = kx * u[0] + ky * u[1]
    k2 = kx * kx + ky * ky
    g = eos.pressure(rho) / rho + eos.dpressure_drho(rho)
    return np.array(
        [
            [ku, rho * kx, rho * ky],
            [g * kx, ku + 1j * (nu * k2 + eta * kx * kx), 1j * eta * kx * ky],
            [g * ky, 1j * eta * kx * ky, ku + 1j * (nu * k2 + eta * ky * ky)],
        ],
        dtype=complex,
    )


def _match(values, targets):
    # brute-force assignment; three modes only
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(len(values))):
        cost = sum(abs(values[p] - t) for p, t in zip(perm, targets))
        if cost < best_cost:
            best, best_cost = perm, cost
    return [values[p] for p in best]


def ns_matrix_spectrum(rho, u, eos: EquationOfState, nu, eta, k_vec):
    """Eigenvalues of :func:`ns_matrix`, ordered (shear, ac+, ac-)."""
    lam = eigvals(ns_matrix(rho, u, eos, nu, eta, k_vec))
    target = ns_target_spectrum(rho, u, eos, nu, eta, k_vec).as_tuple()
    return tuple(_match(list(lam), target))


def ns_exact_acoustic(rho, u, eos: EquationOfState, nu, eta, k_vec):
    """Acoustic eigenvalues of :func:`ns_matrix` without the O(k^3) truncation."""
    k_vec = np.asarray(k_vec, dtype=float)
    k = float(np.linalg.norm(k_vec))
    ku = float(k_vec @ np.asarray(u, dtype=float))
    s2 = float(eos.sound_speed_squared(rho))
    half = 0.5j * (nu + eta) * k * k
    root = np.sqrt(complex(s2 * k * k) + half * half)
    return ku + half + root, ku + half - root


def lbgk_hydro_spectrum(rho, u, eos: EquationOfState, beta, k_vec):
    """Chapman-Enskog prediction for the LBGK hydrodynamic modes at ``k_vec``.

    Returns ``(omega_shear, omega_ac_plus, omega_ac_minus)``; the shear entry
    is ``None`` in one dimension.  The acoustic attenuation uses the 1D rates
    evaluated with the velocity projected on the wave direction, which is
    exact for wave-vectors along a lattice axis.
    """
    k_vec = np.atleast_1d(np.asarray(k_vec, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    k = float(np.linalg.norm(k_vec))
    ku = float(k_vec @ u)
    u_par = ku / k if k > 0 else (float(u[0]) if u.size else 0.0)
    # per-axis pressure: take the component along the wave
    cp, cm = eigen_modes(eos, rho, u_par)
    rp, rm = attenuation_rates(cp, cm)
    tau = CS2 * (1.0 - beta) / (2.0 * beta)
    w_p = complex(ku - u_par * k + cp * k, tau * rp * k * k)
    w_m = complex(ku - u_par * k + cm * k, tau * rm * k * k)
    if k_vec.size < 2:
        return None, w_p, w_m
    pi = float(np.mean([eos.pressure(rho, ua) for ua in u]))
    nu = viscosity_from_beta(beta, pi)
    return complex(ku, nu * k * k), w_p, w_m


def transport_coefficients(eos: EquationOfState, rho, beta, D, u=0.0):
    """(nu, eta) implied by the relaxation parameter."""
    nu = viscosity_from_beta(beta, eos.pressure(rho, u))
    return nu, bulk_viscosity(nu, eos, rho, D, u)
