"""Command-line front end: ``python -m lbstab {eos,modes,spectrum,scan,simulate}``.

Every command reads a JSON config (validated against :data:`CONFIG_SCHEMA`,
unknown keys rejected) and writes CSV with ``#``-prefixed JSON metadata
lines.  Floats are written with 17 significant digits so that identical
inputs give byte-identical files; wall time goes to stderr and to a
``<out>.timing.json`` sidecar instead of the CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error,
4 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .eos import (
    EOSDomainError,
    MaxwellConvergenceError,
    VanDerWaals,
    eos_from_config,
    maxwell_coexistence,
)
from .hydro import attenuation_rates, eigen_modes, hydro_stability_d1q3, hydro_stable_band, DegenerateModesError
from .lattice import LatticeDescriptor, UniformState, beta_from_viscosity, viscosity_from_beta
from .linalg import EigenConvergenceError
from .scan import (
    ScanProtocol,
    default_workers,
    entropic_domain,
    ideal_family,
    ideal_family_from_temperature,
    shallow_water_family,
    stability_domain,
    vdw_saturation_family,
)
from .sim import measure_growth
from .spectral import dispersion_curve

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_CONVERGENCE = 0, 2, 3, 4

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1, "maxItems": 3}
_numlist = {"type": "array", "items": _num, "minItems": 1}


def _closed(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


EOS_SCHEMA = {
    "oneOf": [
        _closed({"type": {"const": "ideal"}, "R": _pos, "T": _pos, "varsigma_rho": _pos}, ["type"]),
        _closed({"type": {"const": "shallow_water"}, "g": _pos}, ["type"]),
        _closed({"type": {"const": "vdw"}, "a": {"type": "number", "minimum": 0}, "b": _pos, "R": _pos, "T": _pos, "Tr": _pos}, ["type"]),
        _closed({"type": {"const": "entropic"}, "varsigma": _pos}, ["type"]),
    ]
}

STATE_SCHEMA = _closed(
    {
        "rho": _pos,
        "rho_r": _pos,
        "saturation": {"enum": ["liquid", "vapor"]},
        "u": {"oneOf": [_num, _vec]},
        "beta": {"type": "number", "minimum": 0, "maximum": 1},
        "nu": {"type": "number", "minimum": 0},
    }
)

PROTOCOL_SCHEMA = _closed(
    {
        "dk": _pos,
        "n_angles": {"type": "integer", "minimum": 1},
        "angles": _numlist,
        "resolution": _pos,
        "tol": {"type": "number", "minimum": 0},
        "u_search_max": _pos,
    }
)

FAMILY_SCHEMA = {
    "oneOf": [
        _closed({"type": {"const": "ideal"}, "varsigma_rho": _numlist, "R": _pos}, ["type", "varsigma_rho"]),
        _closed({"type": {"const": "ideal_T"}, "T": _numlist, "R": _pos}, ["type", "T"]),
        _closed({"type": {"const": "shallow_water"}, "rho": _numlist, "g": _pos}, ["type", "rho"]),
        _closed(
            {"type": {"const": "vdw_saturation"}, "Tr": _numlist, "a": _num, "b": _pos, "R": _pos},
            ["type", "Tr"],
        ),
        _closed(
            {
                "type": {"const": "entropic"},
                "nu": _numlist,
                "n_u": {"type": "integer", "minimum": 1},
                "u_lim": _pos,
                "reference": {"enum": ["entropic", "isothermal"]},
            },
            ["type", "nu"],
        ),
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lbstab run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": {"enum": ["d1q3", "d2q9", "d3q27"]},
        "eos": EOS_SCHEMA,
        "state": STATE_SCHEMA,
        "threads": {"type": "integer", "minimum": 1},
        "density_sweep": _closed(
            {"min": _pos, "max": _pos, "n": {"type": "integer", "minimum": 2}, "reduced": {"type": "boolean"}},
            ["min", "max", "n"],
        ),
        "velocity_sweep": _closed(
            {"min": _num, "max": _num, "n": {"type": "integer", "minimum": 2}}, ["min", "max", "n"]
        ),
        "k_path": {
            "oneOf": [
                _closed({"start": _vec, "stop": _vec, "n": {"type": "integer", "minimum": 2}}, ["start", "stop", "n"]),
                _closed({"points": {"type": "array", "items": _vec, "minItems": 1}}, ["points"]),
            ]
        },
        "scan": _closed(
            {"family": FAMILY_SCHEMA, "beta": _numlist, "preset": {"enum": ["paper", "coarse"]}, "protocol": PROTOCOL_SCHEMA},
            ["family"],
        ),
        "simulate": _closed(
            {
                "grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1, "maxItems": 3},
                "k_index": {"type": "array", "items": {"type": "integer"}, "minItems": 1, "maxItems": 3},
                "n_steps": {"type": "integer", "minimum": 1},
                "amplitude": {"type": "number", "minimum": 0},
            },
            ["k_index"],
        ),
    },
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# helpers


def version_string() -> str:
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    x = float(v)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def render_csv(meta: list[dict], columns, rows) -> str:
    lines = ["# " + json.dumps(_jsonable(m), sort_keys=True) for m in meta]
    lines.append(",".join(columns))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc


def _need(cfg, key, cmd):
    if key not in cfg:
        raise ConfigError(f"'{cmd}' needs a '{key}' section")
    return cfg[key]


def _lattice(cfg, default="d2q9") -> LatticeDescriptor:
    return LatticeDescriptor.from_token(cfg.get("lattice", default))


def _eos(cfg, cmd):
    try:
        return eos_from_config(_need(cfg, "eos", cmd))
    except ValueError as exc:
        if isinstance(exc, EOSDomainError):
            raise
        raise ConfigError(str(exc)) from exc


def resolve_density(eos, st: dict) -> float:
    given = [k for k in ("rho", "rho_r", "saturation") if k in st]
    if len(given) != 1:
        raise ConfigError("state needs exactly one of 'rho', 'rho_r', 'saturation'")
    if "rho" in st:
        return float(st["rho"])
    if not isinstance(eos, VanDerWaals):
        raise ConfigError("'rho_r' and 'saturation' need a van der Waals equation of state")
    if "rho_r" in st:
        return float(eos.rho_from_reduced(st["rho_r"]))
    pair = maxwell_coexistence(eos)
    return pair.rho_liquid if st["saturation"] == "liquid" else pair.rho_vapor


def resolve_velocity(st: dict, D: int) -> np.ndarray:
    u = np.atleast_1d(np.asarray(st.get("u", 0.0), dtype=float))
    if u.size == 1 and D > 1:
        u = np.concatenate([u, np.zeros(D - 1)])
    if u.shape != (D,):
        raise ConfigError(f"state.u must have {D} components")
    return u


def resolve_beta(eos, rho, u, st: dict):
    """(beta, nu), with exactly one of them given in the config."""
    if ("beta" in st) == ("nu" in st):
        raise ConfigError("state needs exactly one of 'beta' or 'nu'")
    pi = float(np.mean([eos.pressure(rho, ua) for ua in u]))
    if "beta" in st:
        beta = float(st["beta"])
        if beta <= 0:
            raise ConfigError("beta must be positive")
        return beta, viscosity_from_beta(beta, pi)
    nu = float(st["nu"])
    return beta_from_viscosity(nu, pi), nu


def _state(cfg, eos, lat, cmd):
    st = _need(cfg, "state", cmd)
    rho = resolve_density(eos, st)
    u = resolve_velocity(st, lat.D)
    beta, nu = resolve_beta(eos, rho, u, st)
    return UniformState(rho, tuple(u), beta), nu


def _protocol(scfg: dict, preset: str | None) -> ScanProtocol:
    name = preset or scfg.get("preset", "coarse")
    p = dict(scfg.get("protocol", {}))
    if "n_angles" in p and "angles" in p:
        raise ConfigError("give either 'n_angles' or 'angles'")
    if "n_angles" in p:
        p["angles"] = tuple(np.linspace(-0.5 * np.pi, 0.5 * np.pi, p.pop("n_angles")))
    base = ScanProtocol.preset(name)
    kw = {**base.to_dict(), **p}
    kw["angles"] = tuple(kw["angles"])
    return ScanProtocol(**kw)


# ---------------------------------------------------------------------------
# commands; each returns (meta list, columns, rows)


def cmd_eos(cfg, args):
    eos = _eos(cfg, "eos")
    sw = cfg.get("density_sweep", {"min": 0.05, "max": 2.5, "n": 50, "reduced": isinstance(eos, VanDerWaals)})
    grid = np.linspace(sw["min"], sw["max"], sw["n"])
    reduced = sw.get("reduced", False)
    if reduced and not isinstance(eos, VanDerWaals):
        raise ConfigError("reduced density sweep needs a van der Waals equation of state")
    rhos = eos.rho_from_reduced(grid) if reduced else grid
    rows = []
    for r in rhos:
        pi = eos.pressure(float(r))
        s2 = eos.sound_speed_squared(float(r))
        hyp = s2 >= 0.0
        rows.append((r, pi, math.sqrt(s2) if hyp else math.nan, hyp))
    meta = [{"command": "eos", "version": version_string(), "eos": eos.to_config()}]
    if isinstance(eos, VanDerWaals):
        crit = {"T_c": eos.T_c, "rho_c": eos.rho_c, "P_c": eos.P_c, "Tr": eos.Tr}
        meta.append({"critical": crit})
        if eos.T < eos.T_c:
            pair = maxwell_coexistence(eos)
            meta.append(
                {"coexistence": {"rho_vapor": pair.rho_vapor, "rho_liquid": pair.rho_liquid, "p_sat": pair.p_sat}}
            )
    return meta, ("rho", "pi_star", "varsigma_rho", "hyperbolic"), rows


def cmd_modes(cfg, args):
    eos = _eos(cfg, "modes")
    st = _need(cfg, "state", "modes")
    rho = resolve_density(eos, st)
    sw = cfg.get("velocity_sweep", {"min": -1.0, "max": 1.0, "n": 2001})
    rows = []
    for u in np.linspace(sw["min"], sw["max"], sw["n"]):
        try:
            cp, cm = eigen_modes(eos, rho, u)
        except EOSDomainError:
            rows.append((u, math.nan, math.nan, math.nan, math.nan, False))
            continue
        try:
            rp, rm = attenuation_rates(cp, cm)
        except DegenerateModesError:
            rp = rm = math.nan
        rows.append((u, cp, cm, rp, rm, bool(hydro_stability_d1q3(cp, cm))))
    band = hydro_stable_band(eos, rho, sw["min"], sw["max"])
    meta = [
        {"command": "modes", "version": version_string(), "eos": eos.to_config(), "rho": rho},
        {"stable_band": list(band) if band else None},
    ]
    return meta, ("u", "c_plus", "c_minus", "R_plus", "R_minus", "stable"), rows


def _k_path(cfg, D):
    kp = _need(cfg, "k_path", "spectrum")
    if "points" in kp:
        pts = [np.asarray(p, dtype=float) for p in kp["points"]]
    else:
        a, b = np.asarray(kp["start"], float), np.asarray(kp["stop"], float)
        if a.shape != b.shape:
            raise ConfigError("k_path start and stop differ in length")
        pts = [a + t * (b - a) for t in np.linspace(0.0, 1.0, kp["n"])]
    if any(p.shape != (D,) for p in pts):
        raise ConfigError(f"k_path points must have {D} components")
    return pts


def cmd_spectrum(cfg, args):
    lat = _lattice(cfg)
    eos = _eos(cfg, "spectrum")
    state, nu = _state(cfg, eos, lat, "spectrum")
    try:
        curve = dispersion_curve(lat, eos, state, _k_path(cfg, lat.D))
    except ValueError as exc:
        if isinstance(exc, EOSDomainError):
            raise
        raise ConfigError(str(exc)) from exc
    rows = []
    ambiguous = []
    for res in curve:
        kx = res.k_vec[0]
        ky = res.k_vec[1] if lat.D > 1 else 0.0
        if res.ambiguous:
            ambiguous.append([float(v) for v in res.k_vec])
        for lab, w in zip(res.labels, res.omega):
            rows.append((kx, ky, lab, w.real, w.imag, res.spectral_radius))
    meta = [
        {
            "command": "spectrum",
            "version": version_string(),
            "lattice": lat.token,
            "eos": eos.to_config(),
            "state": {"rho": state.rho, "u": list(state.u), "beta": state.beta, "nu": nu},
        },
        {
            "convention": "omega = i Ln(lambda); im_omega = ln|lambda| (negative decays). "
            "Dissipation-positive values are -im_omega."
        },
        {"ambiguous_k": ambiguous},
    ]
    return meta, ("k_x", "k_y", "mode_label", "re_omega", "im_omega", "spectral_radius"), rows


def _family(fcfg):
    t = fcfg["type"]
    if t == "ideal":
        return ideal_family(fcfg["varsigma_rho"], fcfg.get("R", 1.0))
    if t == "ideal_T":
        return ideal_family_from_temperature(fcfg["T"], fcfg.get("R", 1.0))
    if t == "shallow_water":
        return shallow_water_family(fcfg["rho"], fcfg.get("g", 2.0 / 3.0))
    if t == "vdw_saturation":
        kw = {k: fcfg[k] for k in ("a", "b", "R") if k in fcfg}
        return vdw_saturation_family(fcfg["Tr"], **kw)
    raise ConfigError(f"unknown family {t!r}")  # pragma: no cover


DEFAULT_BETAS = tuple(np.r_[np.linspace(0.5, 0.95, 16), [0.96, 0.97, 0.98, 0.99]])


def cmd_scan(cfg, args):
    lat = _lattice(cfg)
    scfg = _need(cfg, "scan", "scan")
    protocol = _protocol(scfg, args.preset)
    threads = args.threads or cfg.get("threads") or default_workers()
    fcfg = scfg["family"]
    head = {
        "command": "scan",
        "version": version_string(),
        "lattice": lat.token,
        "protocol": protocol.to_dict(),
        "family": fcfg,
    }
    if fcfg["type"] == "entropic":
        from .eos import EntropicIsothermal, IdealGas

        n = fcfg.get("n_u", 11)
        lim = fcfg.get("u_lim", 1.0)
        axis = np.linspace(-lim, lim, n)
        if lat.D == 1:
            ugrid = axis[:, None]
        else:
            UX, UY = np.meshgrid(axis, axis, indexing="ij")
            ugrid = np.stack([UX.ravel(), UY.ravel()], axis=1)
        eos = IdealGas(T=1.0 / 3.0) if fcfg.get("reference") == "isothermal" else EntropicIsothermal()
        rows = []
        for nu in fcfg["nu"]:
            flags = entropic_domain(lat, nu, ugrid, protocol, eos=eos, threads=threads)
            for u, ok in zip(ugrid, flags):
                ux = u[0]
                uy = u[1] if lat.D > 1 else 0.0
                rows.append((nu, ux, uy, bool(ok)))
        head["eos"] = eos.to_config()
        return [head], ("nu", "u_x", "u_y", "stable"), rows
    betas = scfg.get("beta", list(DEFAULT_BETAS))
    grid = stability_domain(lat, _family(fcfg), betas, protocol, threads=threads)
    errors = {f"{i},{j}": e for (i, j), e in sorted(grid.errors.items())}
    return [head, {"cell_errors": errors}], grid.CSV_COLUMNS, list(grid.rows())


def cmd_simulate(cfg, args):
    lat = _lattice(cfg)
    eos = _eos(cfg, "simulate")
    state, nu = _state(cfg, eos, lat, "simulate")
    sc = _need(cfg, "simulate", "simulate")
    grid = tuple(sc.get("grid", [64] * lat.D))
    if len(grid) != lat.D or len(sc["k_index"]) != lat.D:
        raise ConfigError(f"grid and k_index need {lat.D} entries")
    try:
        g = measure_growth(lat, eos, state, grid, sc["k_index"], sc.get("n_steps", 400), sc.get("amplitude", 1e-6))
    except ValueError as exc:
        if isinstance(exc, EOSDomainError):
            raise
        raise ConfigError(str(exc)) from exc
    meta = [
        {
            "command": "simulate",
            "version": version_string(),
            "lattice": lat.token,
            "eos": eos.to_config(),
            "state": {"rho": state.rho, "u": list(state.u), "beta": state.beta, "nu": nu},
            "grid": list(grid),
            "k_index": list(sc["k_index"]),
        },
        {
            "sigma": g.sigma,
            "predicted": g.predicted,
            "relative_error": g.relative_error,
            "fit_residual": g.residual,
            "unstable": g.unstable,
            "terminated_early": g.terminated_early,
        },
    ]
    return meta, ("step", "energy", "fitted_rate"), list(g.rows())


COMMANDS = {
    "eos": cmd_eos,
    "modes": cmd_modes,
    "spectrum": cmd_spectrum,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lbstab", description="Linear stability of LBGK models with non-ideal pressure.")
    ap.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    sub = ap.add_subparsers(dest="command")
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0] if fn.__doc__ else name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output CSV (default: stdout)")
        p.add_argument("--threads", type=int, default=None, help="worker processes (default: available CPUs)")
        if name == "scan":
            p.add_argument("--preset", choices=("paper", "coarse"), default=None)
        else:
            p.set_defaults(preset=None)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True))
        return EXIT_OK
    if not args.command:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        meta, columns, rows = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EOSDomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (MaxwellConvergenceError, EigenConvergenceError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        # invalid values that pass the schema (e.g. rho outside a state's range)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render_csv(meta, columns, rows)
    wall = time.perf_counter() - t0
    if args.out:
        Path(args.out).write_text(text)
        Path(args.out + ".timing.json").write_text(json.dumps({"wall_time_s": wall, "command": args.command}) + "\n")
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:  # e.g. piped into head
            pass
    print(f"{args.command}: {len(rows)} rows in {wall:.2f} s", file=sys.stderr)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
