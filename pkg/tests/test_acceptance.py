"""One test per acceptance criterion, at the stated tolerance.

Scans run on the coarse preset with one worker and are cached per module so
the absolute-bound post-condition can inspect every scan produced here.
"""

import time

import numpy as np
import pytest

from lbstab.cli import DEFAULT_BETAS, cmd_modes
from lbstab.eos import (
    VARSIGMA,
    EntropicIsothermal,
    IdealGas,
    ShallowWater,
    VanDerWaals,
    consistency_order,
    equal_area_residual,
    maxwell_coexistence,
)
from lbstab.hydro import hydro_stability_d1q3, schur_conditions_d1q3, schur_stability_all_k, state_from_modes
from lbstab.lattice import D1Q3, D2Q9, UniformState, equilibrium, moments
from lbstab.linalg import spectral_radius_batch
from lbstab.scan import (
    ScanProtocol,
    entropic_domain,
    ideal_family,
    max_stable_velocity,
    shallow_water_family,
    stability_domain,
    vdw_saturation_family,
)
from lbstab.sim import init_perturbed, measure_growth, step
from lbstab.spectral import d1q3_collision_from_modes, equilibrium_jacobian, spectral_radii, spectrum

COARSE = ScanProtocol.coarse()
BOUNDARY = 1e-9
C_GRID = np.linspace(-1.2, 1.2, 241)
K_MID = (np.arange(1, 65) - 0.5) * np.pi / 64
SW_RHOS = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
VDW_TR = np.round(np.arange(0.40, 0.91 + 1e-9, 0.03), 2)

_SCANS = {}


def _timed_scan(name, lat, family, betas):
    t0 = time.perf_counter()
    grid = stability_domain(lat, family, betas, COARSE, threads=1)
    _SCANS[name] = grid
    return grid, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ideal_scan():
    return _timed_scan("ideal", D2Q9, ideal_family([1.0, 1.05, 1.2]), DEFAULT_BETAS)


@pytest.fixture(scope="module")
def ideal_near_lattice_scan():
    return _timed_scan("ideal_near", D2Q9, ideal_family([VARSIGMA, 0.65, 0.8]), DEFAULT_BETAS)


@pytest.fixture(scope="module")
def shallow_water_scan():
    return _timed_scan("shallow_water", D2Q9, shallow_water_family(SW_RHOS), [0.98, 0.99])


@pytest.fixture(scope="module")
def vdw_scan():
    return _timed_scan("vdw", D2Q9, vdw_saturation_family(VDW_TR), DEFAULT_BETAS)


# 1, 2 -----------------------------------------------------------------------


def _band(cfg):
    t0 = time.perf_counter()
    meta, _, rows = cmd_modes(cfg, None)
    return meta[1]["stable_band"], time.perf_counter() - t0


def test_c01_shallow_water_band():
    band, wall = _band({"eos": {"type": "shallow_water", "g": 2 / 3}, "state": {"rho": 1.0}})
    assert band[0] == pytest.approx(-0.1835, abs=1e-3)
    assert band[1] == pytest.approx(0.1835, abs=1e-3)
    assert wall < 1.0


def test_c02_vdw_band():
    cfg = {"eos": {"type": "vdw", "a": 1 / 49, "b": 2 / 21, "Tr": 0.8}, "state": {"rho_r": 0.24}}
    band, wall = _band(cfg)
    assert band[0] == pytest.approx(-0.1605, abs=1e-3)
    assert band[1] == pytest.approx(0.1605, abs=1e-3)
    assert wall < 1.0


# 3, 4 -----------------------------------------------------------------------


def _mode_grid():
    cp, cm = np.meshgrid(C_GRID, C_GRID, indexing="ij")
    return cp.ravel(), cm.ravel()


def _schur_band(cp, cm, ks):
    """Points within BOUNDARY of either Schur condition at any of ``ks``."""
    near = np.zeros(cp.shape, dtype=bool)
    for k in ks:
        g2, g3 = schur_conditions_d1q3(cp, cm, k)
        near |= (np.abs(g2) <= BOUNDARY) | (np.abs(g3) <= BOUNDARY)
    return near


def test_c03_schur_matches_spectral_radius():
    t0 = time.perf_counter()
    cp, cm = _mode_grid()
    u, s2 = state_from_modes(cp, cm)
    schur = np.ones(cp.shape, dtype=bool)
    for k in K_MID:
        g2, g3 = schur_conditions_d1q3(cp, cm, k)
        schur &= (g2 <= 0) & (g3 <= 0)
    near_schur = _schur_band(cp, cm, K_MID)
    ph = np.exp(-1j * np.outer(K_MID, [-1.0, 0.0, 1.0]))
    for beta in (0.51, 0.625, 0.9):
        C = d1q3_collision_from_modes(u, s2, beta)
        rad = np.zeros(cp.shape)
        for p in ph:
            rad = np.maximum(rad, spectral_radius_batch(p[None, :, None] * C))
        near = near_schur | (np.abs(rad - 1.0) <= BOUNDARY)
        brute = rad <= 1.0 + BOUNDARY
        assert np.count_nonzero((brute != schur) & ~near) == 0, beta
    assert time.perf_counter() - t0 < 120


def test_c04_hydro_condition_is_sufficient():
    t0 = time.perf_counter()
    cp, cm = _mode_grid()
    half = cp >= cm  # c+ is the larger root by definition
    cp, cm = cp[half], cm[half]
    hydro = hydro_stability_d1q3(cp, cm)
    schur = schur_stability_all_k(cp, cm, K_MID)
    near = _schur_band(cp, cm, [0.0, np.pi, *K_MID])
    for c in (-1.0, 0.0, 1.0):
        near |= (np.abs(cp - c) <= BOUNDARY) | (np.abs(cm - c) <= BOUNDARY)
    assert np.count_nonzero((hydro != schur) & ~near) == 0
    assert time.perf_counter() - t0 < 60


# 5 ---------------------------------------------------------------------------


def test_c05_chapman_enskog_limits():
    t0 = time.perf_counter()
    k = 1e-2
    res = spectrum(D2Q9, ShallowWater(g=2 / 3), UniformState(1.0, (0.1, 0.0), 0.625), [k, 0.0])
    assert -res.mode("shear").imag / k**2 == pytest.approx(0.1, rel=0.01)
    assert res.mode("ac+").real / k == pytest.approx(0.1 + 0.8165, rel=0.01)
    assert res.mode("ac-").real / k == pytest.approx(0.1 - 0.8165, rel=0.01)

    eos = VanDerWaals.from_reduced(0.8)
    rho = eos.rho_from_reduced(0.24)
    assert float(eos.sound_speed(rho)) == pytest.approx(0.16040, rel=1e-4)
    res = spectrum(D2Q9, eos, UniformState(rho, (0.1, 0.0), 0.625), [k, 0.0])
    nu = (0.5 / 0.625 - 0.5) * float(eos.pressure(rho))
    assert -res.mode("shear").imag / k**2 == pytest.approx(nu, rel=0.01)
    assert res.mode("ac+").real / k == pytest.approx(0.1 + 0.16040, rel=0.01)
    assert res.mode("ac-").real / k == pytest.approx(0.1 - 0.16040, rel=0.01)
    assert time.perf_counter() - t0 < 5


# 6, 7 ------------------------------------------------------------------------


def test_c06_no_stable_flow_beyond_lattice_speed_of_light(ideal_scan):
    grid, wall = ideal_scan
    assert not grid.errors
    assert np.all(grid.u_max == 0.0)
    assert wall < 600


def test_c07_absolute_velocity_bound(ideal_scan, ideal_near_lattice_scan, shallow_water_scan, vdw_scan):
    near, _ = ideal_near_lattice_scan
    assert np.nanmax(near.u_max) > 0.0  # the bound is exercised, not vacuous
    checked = 0
    for name, grid in _SCANS.items():
        rows = grid.varsigma_rho >= VARSIGMA - 1e-12
        vals = grid.u_max[rows]
        vals = vals[np.isfinite(vals)]
        checked += vals.size
        assert np.all(vals <= 0.4227), name
    assert checked > 0


# 8 ---------------------------------------------------------------------------


def test_c08_non_ideal_beta_ceiling(shallow_water_scan, vdw_scan):
    sw, _ = shallow_water_scan
    vdw, _ = vdw_scan
    cols = np.isin(vdw.betas, [0.98, 0.99])
    assert cols.sum() == 2
    offenders = []
    for name, grid, block in (("shallow_water", sw, sw.u_max), ("vdw", vdw, vdw.u_max[:, cols])):
        betas = grid.betas if block.shape[1] == len(grid.betas) else grid.betas[cols]
        for i, j in zip(*np.nonzero(block > 0.0)):
            offenders.append((name, float(grid.params[i]), float(betas[j]), float(block[i, j])))
    assert not offenders, offenders


# 9 ---------------------------------------------------------------------------


def _liquid(Tr):
    return vdw_saturation_family([Tr])[0]


def _stable_somewhere(Tr, beta=0.625):
    m = _liquid(Tr)
    return max_stable_velocity(D2Q9, m.eos, m.rho, beta, COARSE).u_max > 0.0


def test_c09_vdw_instability_onset(vdw_scan):
    t0 = time.perf_counter()
    grid, _ = vdw_scan
    assert not grid.errors
    above = grid.varsigma_rho > 0.74
    assert above.any()
    assert np.all(grid.u_max[above] == 0.0)

    # locate the onset between the last row with a stable cell and the first without
    pos = np.nanmax(grid.u_max, axis=1) > 0.0
    order = np.argsort(grid.varsigma_rho)
    p_sorted = pos[order]
    first_dead = int(np.argmax(~p_sorted))
    assert first_dead > 0 and not p_sorted[first_dead:].any()
    hi_Tr = float(grid.params[order][first_dead - 1])  # stable, smaller varsigma
    lo_Tr = float(grid.params[order][first_dead])
    for _ in range(12):
        mid = 0.5 * (lo_Tr + hi_Tr)
        if _stable_somewhere(mid):
            hi_Tr = mid
        else:
            lo_Tr = mid
    onset = 0.5 * (_liquid(lo_Tr).varsigma_rho + _liquid(hi_Tr).varsigma_rho)
    assert abs(onset - 0.74) <= 0.02, f"onset at varsigma_rho = {onset:.5f}"
    assert time.perf_counter() - t0 < 900


# 10 --------------------------------------------------------------------------


def test_c10_entropic_domain():
    t0 = time.perf_counter()
    g = np.linspace(-1.0, 1.0, 11)
    U = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    for nu in (1e-5, 0.1):
        assert entropic_domain(D2Q9, nu, U, COARSE, eos=EntropicIsothermal()).all(), nu
    probes = np.array([[0.9, 0.0], [-0.9, 0.0], [0.0, 0.9], [0.0, -0.9]])
    iso = entropic_domain(D2Q9, 1e-5, probes, COARSE, eos=IdealGas(T=1 / 3))
    assert not iso.any()
    assert time.perf_counter() - t0 < 600


# 11 --------------------------------------------------------------------------


def _fd_jacobian(lat, eos, rho, u, h=1e-6):
    f0 = equilibrium(lat, eos, rho, u).f_eq
    c = lat.velocities.astype(float)
    J = np.empty((lat.Q, lat.Q))
    for j in range(lat.Q):
        out = []
        for s in (h, -h):
            f = f0.copy()
            f[j] += s
            r = f.sum()
            out.append(equilibrium(lat, eos, r, f @ c / r).f_eq)
        J[:, j] = (out[0] - out[1]) / (2 * h)
    return J


def test_c11_property_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240611)
    eoses = [IdealGas(T=1 / 3), ShallowWater(g=2 / 3), VanDerWaals.from_reduced(0.8), EntropicIsothermal()]

    # equilibrium moments and Jacobian
    for eos in eoses:
        for lat in (D1Q3, D2Q9):
            for _ in range(20):
                rho = 0.84 * rng.uniform(0.98, 1.02) if isinstance(eos, VanDerWaals) else rng.uniform(0.5, 1.5)
                u = rng.uniform(-0.3, 0.3, lat.D)
                r, v = moments(lat, equilibrium(lat, eos, rho, u).f_eq)
                assert abs(r - rho) <= 1e-14 * max(1.0, rho)
                assert np.max(np.abs(v - u)) <= 1e-14
                J = equilibrium_jacobian(lat, eos, rho, u)
                assert np.max(np.abs(J - _fd_jacobian(lat, eos, rho, u))) < 1e-6

    # Maxwell equal area
    for Tr in (0.6, 0.8, 0.95):
        eos = VanDerWaals.from_reduced(Tr)
        pair = maxwell_coexistence(eos)
        assert abs(equal_area_residual(eos, pair.rho_vapor, pair.rho_liquid, pair.p_sat)) < 1e-10

    # entropic consistency exponent
    assert consistency_order(EntropicIsothermal()) == pytest.approx(4.0, abs=0.05)

    # sound speed vs finite difference of rho pi*
    for eos, rho in ((IdealGas(T=0.3), 1.1), (ShallowWater(g=0.5), 0.7), (VanDerWaals.from_reduced(0.8), 6.5)):
        h = 1e-5 * rho
        fd = ((rho + h) * eos.pressure(rho + h) - (rho - h) * eos.pressure(rho - h)) / (2 * h)
        assert float(eos.sound_speed_squared(rho)) == pytest.approx(fd, rel=1e-8)

    # simulator fixed point and conservation
    st = UniformState(1.0, (0.1, -0.05), 0.8)
    fld = init_perturbed(D2Q9, ShallowWater(g=2 / 3), st, (8, 8), (0, 0), amplitude=0.0)
    f0 = fld.f.copy()
    for _ in range(50):
        fld = step(fld)
    assert np.max(np.abs(fld.f - f0)) < 1e-14
    fld = init_perturbed(D2Q9, IdealGas(T=1 / 3), st, (16, 16), (2, 3), amplitude=1e-5)
    m0, p0 = fld.mass(), fld.momentum()
    for _ in range(200):
        fld = step(fld)
    assert abs(fld.mass() - m0) <= 1e-12 * m0
    assert np.max(np.abs(fld.momentum() - p0)) <= 1e-12 * m0

    # simulator vs spectrum on 20 random stable cases
    grid = (16, 16)
    gk = np.stack(np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n) for n in grid], indexing="ij"), -1).reshape(-1, 2)
    done = 0
    while done < 20:
        eos = [IdealGas(T=rng.uniform(0.15, 0.4)), ShallowWater(g=rng.uniform(0.2, 0.8))][rng.integers(2)]
        st = UniformState(1.0, tuple(rng.uniform(-0.15, 0.15, 2)), rng.uniform(0.55, 0.9))
        if spectral_radii(D2Q9, eos, st, gk).max() > 1.0 + 1e-12:
            continue
        kidx = tuple(int(i) for i in rng.integers(-7, 8, 2))
        if kidx == (0, 0):
            continue
        m = measure_growth(D2Q9, eos, st, grid, kidx, n_steps=300)
        assert m.relative_error < 0.05, (eos, st, kidx, m.sigma, m.predicted)
        done += 1
    assert time.perf_counter() - t0 < 120
