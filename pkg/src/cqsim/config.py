"""Run-configuration parsing and validation.

Configs are flat INI-style files (configparser). Unknown sections or keys
are errors, and validation collects every violation before reporting.
Exactly one source of Markov moments must be given: an [environment]
section (kernels built from a correlator), a [kernels] directory of
sampled-kernel CSV files, or an explicit [moments] section. A scenario
preset may supply everything, with file sections acting as overrides.

All quantities are in natural units with a user-settable hbar
(default 1); energies and temperatures share units (k_B = 1).
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field

import numpy as np

from . import hilbert, scenarios
from .cq_coeffs import ModelConfig, assemble
from .cq_master import EvolutionConfig
from .errors import ConfigError
from .kernels import (
    LocalMoments,
    build_cubic_kernels,
    kernel_from_csv,
    moments_from_kernels,
    ohmic_correlator,
    thermal_mode_correlator,
)
from .semi_wigner import PhaseSpaceGrid
from .unraveling import GaussianInitial

_SCHEMA = {
    "run": {"scenario": str, "out": str},
    "model": {
        "hbar": float,
        "lambda1": float,
        "omega_c": float,
        "dim": int,
        "h_psi": str,
        "f2": str,
        "rho_psi": str,
    },
    "environment": {
        "kind": str,
        "omega": float,
        "linewidth": float,
        "cutoff": float,
        "eta": float,
        "temperature": float,
        "lambda2": float,
        "lambda3": float,
        "window": float,
        "dtau": float,
    },
    "moments": {k: float for k in LocalMoments().to_dict()},
    "kernels": {"dir": str},
    "grid": {
        "h_min": float,
        "h_max": float,
        "n_h": int,
        "pi_min": float,
        "pi_max": float,
        "n_pi": int,
    },
    "initial": {
        "kind": str,
        "h0": float,
        "pi0": float,
        "sigma_h": float,
        "sigma_pi": float,
    },
    "evolution": {
        "dt": float,
        "t_final": float,
        "output_stride": int,
        "integrator": str,
        "monitor_positivity": bool,
        "monitor_boundaries": bool,
    },
    "unravel": {"dt": float, "trajectories": int, "seed": int, "output_stride": int, "chunk": int},
    "observables": {"names": str},
}

_KERNEL_FILES = {
    "N22": ("N22.csv", False),
    "D22": ("D22.csv", True),
    "N23": ("N23.csv", False),
    "N32": ("N32.csv", False),
    "D32": ("D32.csv", True),
    "N33R": ("N33R.csv", False),
    "N33": ("N33.csv", False),
    "D33": ("D33.csv", True),
}


@dataclass
class RunConfig:
    """Typed view of a parsed config file plus the raw text."""

    sections: dict
    scenario: str | None
    out_dir: str | None
    text: str = field(repr=False, default="")

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def has(self, section: str) -> bool:
        return section in self.sections


def _parse_bool(raw: str) -> bool:
    val = raw.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_config(path) -> RunConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as f:
            text = f.read()
        parser.read_string(text)
    except OSError as err:
        raise ConfigError([f"cannot read config: {err}"]) from err
    except configparser.Error as err:
        raise ConfigError([f"malformed config: {err}"]) from err

    violations = []
    sections = {}
    for sec in parser.sections():
        if sec not in _SCHEMA:
            violations.append(f"unknown section [{sec}]")
            continue
        sections[sec] = {}
        for key, raw in parser.items(sec):
            if key not in _SCHEMA[sec]:
                violations.append(f"unknown key '{key}' in section [{sec}]")
                continue
            caster = _SCHEMA[sec][key]
            try:
                if caster is bool:
                    sections[sec][key] = _parse_bool(raw)
                else:
                    sections[sec][key] = caster(raw)
            except ValueError:
                violations.append(f"[{sec}] {key}: cannot parse {raw!r} as {caster.__name__}")

    scenario = sections.get("run", {}).get("scenario")
    if scenario is not None and scenario not in scenarios.PRESETS:
        violations.append(f"[run] scenario: unknown preset {scenario!r} "
                          f"(available: {', '.join(sorted(scenarios.PRESETS))})")

    sources = [s for s in ("environment", "moments", "kernels") if s in sections]
    if len(sources) > 1:
        violations.append(
            "conflicting moment sources: provide exactly one of [environment], "
            f"[moments], [kernels] (got {', '.join(sources)})"
        )
    if not sources and scenario is None:
        violations.append("no moment source: provide one of [environment], [moments], "
                          "[kernels], or a [run] scenario")

    mom = sections.get("moments", {})
    for key in ("N33", "N33_2"):
        if mom.get(key, 0.0) < 0.0:
            violations.append(
                f"[moments] {key} = {mom[key]!r} is negative; complete positivity "
                f"requires {key} >= 0"
            )
    env = sections.get("environment", {})
    if "kind" in env and env["kind"] not in ("thermal_mode", "ohmic"):
        violations.append(f"[environment] kind must be thermal_mode or ohmic, got {env['kind']!r}")
    for sec, key in (
        ("model", "hbar"),
        ("environment", "temperature"),
        ("environment", "omega"),
        ("environment", "cutoff"),
        ("evolution", "dt"),
        ("evolution", "t_final"),
        ("unravel", "dt"),
    ):
        val = sections.get(sec, {}).get(key)
        if val is not None and val <= 0:
            violations.append(f"[{sec}] {key} must be positive, got {val!r}")
    for key in ("n_h", "n_pi"):
        val = sections.get("grid", {}).get(key)
        if val is not None and val < 8:
            violations.append(f"[grid] {key} must be >= 8, got {val}")

    if violations:
        raise ConfigError(violations)
    return RunConfig(
        sections=sections,
        scenario=scenario,
        out_dir=sections.get("run", {}).get("out"),
        text=text,
    )


# ---------------------------------------------------------------------------
# Operator / state spellings


def parse_operator(spec_str: str, dim: int, name: str) -> np.ndarray:
    """Parse 'sigma_x', 'identity', 'zero' (optionally '*<scale>') or JSON."""
    s = spec_str.strip()
    if s.startswith("["):
        return hilbert.operator_from_json(json.loads(s))
    scale = 1.0
    if "*" in s:
        base, factor = s.split("*", 1)
        s = base.strip()
        scale = float(factor)
    named = {
        "sigma_x": hilbert.PAULI_X,
        "sigma_y": hilbert.PAULI_Y,
        "sigma_z": hilbert.PAULI_Z,
    }
    if s in named:
        if dim != 2:
            raise ConfigError([f"{name}: {s} requires dim = 2, got {dim}"])
        return scale * named[s]
    if s == "identity":
        return scale * hilbert.identity(dim)
    if s == "zero":
        return np.zeros((dim, dim), dtype=complex)
    raise ConfigError([f"{name}: unknown operator spelling {spec_str!r}"])


def parse_state(spec_str: str, dim: int, name: str) -> np.ndarray:
    s = spec_str.strip()
    if s.startswith("["):
        return hilbert.operator_from_json(json.loads(s))
    if s == "maximally_mixed":
        return hilbert.identity(dim) / dim
    if dim == 2:
        ket = {
            "up": np.array([1.0, 0.0]),
            "down": np.array([0.0, 1.0]),
            "plus": np.array([1.0, 1.0]) / np.sqrt(2.0),
            "minus": np.array([1.0, -1.0]) / np.sqrt(2.0),
        }.get(s)
        if ket is not None:
            return np.outer(ket, ket.conj()).astype(complex)
    raise ConfigError([f"{name}: unknown state spelling {spec_str!r}"])


# ---------------------------------------------------------------------------
# Materialization


@dataclass
class RunBundle:
    """Everything a command needs, with the scenario merged in."""

    scenario_name: str | None
    model: ModelConfig
    moments: LocalMoments
    coeffs: object
    grid: PhaseSpaceGrid
    initial_kind: str
    initial: GaussianInitial
    evolution: EvolutionConfig
    observables: dict
    unravel: dict
    kernels: dict | None = None  # sampled kernels when built from env/files
    environment: object = None
    monitor_boundaries: bool = True


def _load_kernel_dir(path) -> dict:
    import os

    out = {}
    for key, (fname, retarded) in _KERNEL_FILES.items():
        full = os.path.join(path, fname)
        if os.path.exists(full):
            pair = key[1:3]
            out[key] = kernel_from_csv(full, pair=pair, retarded=retarded)
    if not out:
        raise ConfigError([f"[kernels] dir: no kernel CSV files found under {path!r}"])
    return out


def materialize(cfg: RunConfig) -> RunBundle:
    """Resolve a parsed config (plus optional scenario) into a run bundle."""
    base = scenarios.build_scenario(cfg.scenario) if cfg.scenario else None

    msec = cfg.sections.get("model", {})
    if base is not None:
        model_kwargs = {
            "hbar": base.model.hbar,
            "lambda1": base.model.lambda1,
            "omega_c": base.model.omega_c,
            "H_psi": base.model.H_psi,
            "F2": base.model.F2,
        }
        dim = base.model.dim
        rho_psi = base.initial.rho_psi
    else:
        model_kwargs = {"hbar": 1.0, "lambda1": 0.0, "omega_c": 0.0, "H_psi": None, "F2": None}
        dim = msec.get("dim", 2)
        rho_psi = None
    for key in ("hbar", "lambda1", "omega_c"):
        if key in msec:
            model_kwargs[key] = msec[key]
    dim = msec.get("dim", dim)
    if "h_psi" in msec:
        model_kwargs["H_psi"] = parse_operator(msec["h_psi"], dim, "[model] h_psi")
    if "f2" in msec:
        model_kwargs["F2"] = parse_operator(msec["f2"], dim, "[model] f2")
    if "rho_psi" in msec:
        rho_psi = parse_state(msec["rho_psi"], dim, "[model] rho_psi")
    if model_kwargs["H_psi"] is None or model_kwargs["F2"] is None:
        raise ConfigError(["[model] h_psi and f2 are required without a scenario"])
    if rho_psi is None:
        raise ConfigError(["[model] rho_psi is required without a scenario"])
    model = ModelConfig(**model_kwargs)

    kernels = None
    environment = None
    if cfg.has("environment"):
        env = dict(cfg.sections["environment"])
        kind = env.get("kind")
        if kind is None:
            raise ConfigError(["[environment] kind is required"])
        common = {k: env[k] for k in ("window", "dtau") if k in env}
        if kind == "thermal_mode":
            if "omega" not in env or "temperature" not in env:
                raise ConfigError(["[environment] thermal_mode needs omega and temperature"])
            environment = thermal_mode_correlator(
                omega=env["omega"],
                temperature=env["temperature"],
                hbar=model.hbar,
                linewidth=env.get("linewidth", 0.0),
                **common,
            )
        else:
            if "cutoff" not in env or "temperature" not in env:
                raise ConfigError(["[environment] ohmic needs cutoff and temperature"])
            environment = ohmic_correlator(
                cutoff=env["cutoff"],
                temperature=env["temperature"],
                eta=env.get("eta", 1.0),
                hbar=model.hbar,
                **common,
            )
        ck = build_cubic_kernels(environment, env.get("lambda2", 1.0), env.get("lambda3", 1.0))
        kernels = {
            "N22": ck.N22, "D22": ck.D22, "N33": ck.N33, "D33": ck.D33,
            "N23": ck.N23, "N32": ck.N32, "D23": ck.D23, "D32": ck.D32,
            "N33R": ck.N33,
        }
        moments = moments_from_kernels(
            noise={"22": ck.N22, "33": ck.N33, "23": ck.N23, "32": ck.N32},
            dissipation={"22": ck.D22, "33": ck.D33, "23": ck.D23, "32": ck.D32},
        )
    elif cfg.has("kernels"):
        kernels = _load_kernel_dir(cfg.sections["kernels"]["dir"])
        noise = {k[1:3]: v for k, v in kernels.items() if k.startswith("N") and k != "N33R"}
        dissipation = {k[1:3]: v for k, v in kernels.items() if k.startswith("D")}
        moments = moments_from_kernels(noise=noise, dissipation=dissipation)
    elif cfg.has("moments"):
        moments = LocalMoments.from_dict(cfg.sections["moments"])
    elif base is not None:
        moments = base.moments
    else:  # parse_config guarantees a source exists
        raise ConfigError(["no moment source"])

    coeffs = assemble(moments, model)

    gsec = cfg.sections.get("grid", {})
    if base is not None:
        g = base.grid
        grid = PhaseSpaceGrid(
            gsec.get("h_min", g.h_min), gsec.get("h_max", g.h_max), gsec.get("n_h", g.n_h),
            gsec.get("pi_min", g.pi_min), gsec.get("pi_max", g.pi_max), gsec.get("n_pi", g.n_pi),
        )
    else:
        try:
            grid = PhaseSpaceGrid(
                gsec["h_min"], gsec["h_max"], gsec["n_h"],
                gsec["pi_min"], gsec["pi_max"], gsec["n_pi"],
            )
        except KeyError as err:
            raise ConfigError([f"[grid] missing key {err.args[0]}"]) from None

    isec = cfg.sections.get("initial", {})
    if base is not None:
        init0 = base.initial
        initial_kind = isec.get("kind", base.initial_kind)
    else:
        init0 = GaussianInitial(h0=0.0, pi0=0.0, sigma_h=1.0, sigma_pi=1.0, rho_psi=rho_psi)
        initial_kind = isec.get("kind", "gaussian")
    if initial_kind not in ("gaussian", "point"):
        raise ConfigError([f"[initial] kind must be gaussian or point, got {initial_kind!r}"])
    initial = GaussianInitial(
        h0=isec.get("h0", init0.h0),
        pi0=isec.get("pi0", init0.pi0),
        sigma_h=isec.get("sigma_h", init0.sigma_h),
        sigma_pi=isec.get("sigma_pi", init0.sigma_pi),
        rho_psi=rho_psi if rho_psi is not None else init0.rho_psi,
    )

    esec = cfg.sections.get("evolution", {})
    monitor_boundaries = esec.get(
        "monitor_boundaries", base.monitor_boundaries if base is not None else True
    )
    if base is not None:
        e = base.evolution
        evolution = EvolutionConfig(
            dt=esec.get("dt", e.dt),
            t_final=esec.get("t_final", e.t_final),
            output_stride=esec.get("output_stride", e.output_stride),
            integrator=esec.get("integrator", e.integrator),
            monitor_positivity=esec.get("monitor_positivity", e.monitor_positivity),
        )
    else:
        try:
            evolution = EvolutionConfig(
                dt=esec["dt"],
                t_final=esec["t_final"],
                output_stride=esec.get("output_stride", 10),
                integrator=esec.get("integrator", "rk4"),
                monitor_positivity=esec.get("monitor_positivity", True),
            )
        except KeyError as err:
            raise ConfigError([f"[evolution] missing key {err.args[0]}"]) from None

    osec = cfg.sections.get("observables", {})
    if "names" in osec:
        named = {"sz": hilbert.PAULI_Z, "sx": hilbert.PAULI_X, "sy": hilbert.PAULI_Y}
        observables = {}
        for nm in [x.strip() for x in osec["names"].split(",") if x.strip()]:
            if nm not in named or model.dim != 2:
                raise ConfigError([f"[observables] unknown observable {nm!r} for dim {model.dim}"])
            observables[nm] = named[nm]
    else:
        observables = dict(base.observables) if base is not None else {}

    usec = cfg.sections.get("unravel", {})
    unravel = {
        "dt": usec.get("dt", base.unravel_dt if base else evolution.dt),
        "trajectories": usec.get("trajectories", 1000),
        "seed": usec.get("seed", 1234),
        "output_stride": usec.get("output_stride", base.unravel_stride if base else evolution.output_stride),
        "chunk": usec.get("chunk", 2048),
    }

    return RunBundle(
        scenario_name=cfg.scenario,
        model=model,
        moments=moments,
        coeffs=coeffs,
        grid=grid,
        initial_kind=initial_kind,
        initial=initial,
        evolution=evolution,
        observables=observables,
        unravel=unravel,
        kernels=kernels,
        environment=environment,
        monitor_boundaries=monitor_boundaries,
    )
