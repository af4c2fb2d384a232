import numpy as np
import pytest

from lbstab.eos import EntropicIsothermal, IdealGas, ShallowWater, VanDerWaals
from lbstab.hydro import lbgk_hydro_spectrum
from lbstab.lattice import D1Q3, D2Q9, D3Q27, UniformState, equilibrium
from lbstab.linalg import eigvals
from lbstab.spectral import (
    collision_matrix,
    d1q3_collision_from_modes,
    dispersion_curve,
    equilibrium_jacobian,
    frequencies,
    spectral_radii,
    spectrum,
    step_operator,
    to_growth_convention,
)

LATTICES = [D1Q3, D2Q9, D3Q27]
EOSES = [IdealGas(T=1 / 3), ShallowWater(g=2 / 3), VanDerWaals.from_reduced(0.8), EntropicIsothermal()]


def _rho_for(eos):
    return 0.84 if isinstance(eos, VanDerWaals) else 1.0


def _fd_jacobian(lat, eos, rho, u, h=1e-6):
    f0 = equilibrium(lat, eos, rho, u).f_eq
    c = lat.velocities.astype(float)
    J = np.empty((lat.Q, lat.Q))
    for j in range(lat.Q):
        cols = []
        for s in (+h, -h):
            f = f0.copy()
            f[j] += s
            r = f.sum()
            cols.append(equilibrium(lat, eos, r, f @ c / r).f_eq)
        J[:, j] = (cols[0] - cols[1]) / (2 * h)
    return J


@pytest.mark.parametrize("lat", LATTICES, ids=lambda l: f"D{l.D}")
@pytest.mark.parametrize("eos", EOSES, ids=lambda e: type(e).__name__)
def test_jacobian_matches_finite_differences(lat, eos, rng):
    n = 50 if lat.D < 3 else 10
    rho0 = _rho_for(eos)
    for _ in range(n):
        rho = rho0 * rng.uniform(0.98, 1.02) if isinstance(eos, VanDerWaals) else rng.uniform(0.5, 1.5)
        u = rng.uniform(-0.2, 0.2, lat.D)
        J = equilibrium_jacobian(lat, eos, rho, u)
        assert np.max(np.abs(J - _fd_jacobian(lat, eos, rho, u))) < 1e-6


@pytest.mark.parametrize("lat", LATTICES, ids=lambda l: f"D{l.D}")
@pytest.mark.parametrize("eos", EOSES, ids=lambda e: type(e).__name__)
def test_collision_conserves_mass_and_momentum(lat, eos):
    st = UniformState(_rho_for(eos), np.full(lat.D, 0.05), 0.7)
    C = collision_matrix(lat, eos, st)
    c = lat.velocities.astype(float)
    assert np.max(np.abs(np.ones(lat.Q) @ C - np.ones(lat.Q))) < 1e-12
    assert np.max(np.abs(c.T @ C - c.T)) < 1e-12


def test_jacobian_parity():
    # u -> -u mirrors the velocity set
    eos = ShallowWater(g=2 / 3)
    J = equilibrium_jacobian(D1Q3, eos, 1.0, [0.2])
    Jm = equilibrium_jacobian(D1Q3, eos, 1.0, [-0.2])
    assert Jm == pytest.approx(J[::-1, ::-1], abs=1e-14)


def test_d1q3_modes_path_equals_general():
    eos = ShallowWater(g=2 / 3)
    for u in (-0.3, 0.0, 0.1, 0.45):
        C = collision_matrix(D1Q3, eos, UniformState(1.0, (u,), 0.625))
        C2 = d1q3_collision_from_modes(np.array(u), np.array(2 / 3), 0.625)
        assert np.max(np.abs(C - C2)) < 1e-15


@pytest.mark.parametrize("lat", LATTICES, ids=lambda l: f"D{l.D}")
def test_k_zero_unit_multiplicity(lat):
    st = UniformState(1.0, np.full(lat.D, 0.1), 0.6)
    lam = eigvals(step_operator(lat, IdealGas(T=1 / 3), st, np.zeros(lat.D)).matrix)
    assert np.sum(np.abs(lam - 1.0) < 1e-8) >= 1 + lat.D
    res = spectrum(lat, IdealGas(T=1 / 3), st, np.zeros(lat.D))
    assert res.labels.count("conserved") == 1 + lat.D


def test_periodicity_and_conjugate_symmetry():
    eos = ShallowWater(g=2 / 3)
    st = UniformState(1.0, (0.1, 0.05), 0.8)
    k = np.array([0.7, -1.3])
    r0 = spectral_radii(D2Q9, eos, st, [k])[0]
    # 2 pi shift changes the phases by integer multiples of 2 pi
    r1 = np.max(np.abs(eigvals(step_operator(D2Q9, eos, st, k).matrix)))
    assert r0 == pytest.approx(r1, abs=1e-12)
    from lbstab.spectral import step_matrices

    C = collision_matrix(D2Q9, eos, st)
    A = step_matrices(D2Q9, C, k)
    B = step_matrices(D2Q9, C, k + np.array([2 * np.pi, -2 * np.pi]))
    assert np.max(np.abs(A - B)) < 1e-12
    la = np.sort_complex(eigvals(step_operator(D2Q9, eos, st, k).matrix))
    lb = np.sort_complex(np.conj(eigvals(step_operator(D2Q9, eos, st, -k).matrix)))
    assert la == pytest.approx(lb, abs=1e-10)


def test_brillouin_zone_check():
    with pytest.raises(ValueError):
        step_operator(D1Q3, IdealGas(T=1 / 3), UniformState(1.0, (0.0,), 0.6), [3.2])


@pytest.mark.parametrize("lat", [D1Q3, D2Q9, D3Q27], ids=lambda l: f"D{l.D}")
@pytest.mark.parametrize("eos", [IdealGas(T=1 / 3), ShallowWater(g=2 / 3)], ids=["ideal", "sw"])
def test_small_k_matches_chapman_enskog(lat, eos):
    u = np.zeros(lat.D)
    u[0] = 0.05
    st = UniformState(1.0, u, 0.625)
    for a in range(lat.D):
        k = np.zeros(lat.D)
        k[a] = 1e-3
        res = spectrum(lat, eos, st, k)
        sh, ap, am = lbgk_hydro_spectrum(1.0, u, eos, 0.625, k)
        pairs = [("ac+", ap), ("ac-", am)] + ([] if lat.D == 1 else [("shear", sh)])
        for name, pred in pairs:
            w = res.mode(name)
            pred = to_growth_convention(pred)
            assert w.real / 1e-3 == pytest.approx(pred.real / 1e-3, rel=1e-3, abs=1e-6)
            assert w.imag / 1e-6 == pytest.approx(pred.imag / 1e-6, rel=0.02)


def test_shallow_water_dispersion_example():
    st = UniformState(1.0, (0.1, 0.0), 0.625)
    res = spectrum(D2Q9, ShallowWater(g=2 / 3), st, [0.01, 0.0])
    assert res.mode("shear").real / 0.01 == pytest.approx(0.1, rel=1e-4)
    assert res.mode("ac+").real / 0.01 == pytest.approx(0.1 + np.sqrt(2 / 3), rel=1e-4)
    assert res.mode("ac-").real / 0.01 == pytest.approx(0.1 - np.sqrt(2 / 3), rel=1e-4)
    # all modes decay at this beta
    assert res.stable
    assert np.all(res.omega.imag <= 1e-12)


def test_vdw_dispersion_example():
    eos = VanDerWaals.from_reduced(0.8)
    rho = eos.rho_from_reduced(0.24)
    st = UniformState(rho, (0.1, 0.0), 0.625)
    res = spectrum(D2Q9, eos, st, [0.01, 0.0])
    s = float(eos.sound_speed(rho))
    assert res.mode("ac+").real / 0.01 == pytest.approx(0.1 + s, rel=1e-3)
    assert res.mode("ac-").real / 0.01 == pytest.approx(0.1 - s, rel=1e-3)
    # frozen: shear viscosity from the equilibrium pressure at this state
    assert -res.mode("shear").imag / 1e-4 == pytest.approx(0.011420, rel=1e-3)


def test_ideal_rest_state_stable_over_zone():
    kx, ky = np.meshgrid(np.linspace(-np.pi, np.pi, 21), np.linspace(0, np.pi, 11))
    ks = np.stack([kx.ravel(), ky.ravel()], axis=1)
    r = spectral_radii(D2Q9, IdealGas(T=1 / 3), UniformState(1.0, (0.0, 0.0), 0.9), ks)
    assert np.all(r <= 1 + 1e-12)


def test_neutral_mode_at_zone_corner():
    # the lattice carries an undamped checkerboard-type mode at k = (pi, 0)
    r = spectral_radii(D2Q9, IdealGas(T=1 / 3), UniformState(1.0, (0.0, 0.0), 0.625), [[np.pi, 0.0]])[0]
    assert r == pytest.approx(1.0, abs=1e-13)


def test_frequency_branch():
    w = frequencies(np.array([1.0, -1.0, 0.5j, 0.0]))
    assert w[0] == 0
    assert w[1].real == pytest.approx(np.pi)
    assert w[2].imag == pytest.approx(np.log(0.5))
    assert np.isinf(w[3].imag)


def test_dispersion_labels_independent_of_orientation():
    eos = ShallowWater(g=2 / 3)
    st = UniformState(1.0, (0.1, 0.0), 0.625)
    path = [np.array([k, 0.0]) for k in np.linspace(0.01, np.pi, 40)]
    fwd = dispersion_curve(D2Q9, eos, st, path)
    bwd = dispersion_curve(D2Q9, eos, st, path[::-1])[::-1]
    for a, b in zip(fwd, bwd):
        assert a.labels == b.labels
        assert np.array_equal(a.lam, b.lam)
    for r in fwd:
        assert sorted(l for l in r.labels if l != "kinetic") == ["ac+", "ac-", "shear"]


def test_dispersion_rejects_origin():
    with pytest.raises(ValueError):
        dispersion_curve(D1Q3, IdealGas(T=1 / 3), UniformState(1.0, (0.0,), 0.6), [[0.0], [0.5]])
