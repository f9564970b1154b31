"""Experiment configuration files: flat, sectioned, key = value text.

Sections and keys are fixed; unknown sections or keys are hard errors,
as are malformed values and missing referenced files.  Every key has a
default, so the empty file is the default desk-scale experiment.
"""

from __future__ import annotations

import configparser
import csv
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import EigenSystem, Field, GridSpec, eigensystem
from .noise import NoiseSpec, PowerLawGammas

SCHEMA_VERSION = "1"

CHECK_NAMES = ("mean_square", "flux_l1", "variational", "total_variation", "hminus1_sup")
PROFILES = ("zero", "bump", "mode", "file")


class ConfigError(Exception):
    """Invalid configuration file or option."""


@dataclass(frozen=True)
class GridBlock:
    length: float = 1.0
    n_interior: int = 127


@dataclass(frozen=True)
class NoiseBlock:
    k_max: int = 8
    gamma0: float = 1.0
    gamma_decay: float = 8.0
    seed: int = 42
    n_paths: int = 200
    continuity_alpha: float = 0.5
    override_decay_check: bool = False


@dataclass(frozen=True)
class SolverBlock:
    epsilon: float = 1e-2
    dt: float = 1e-3
    t_final: float = 0.5
    scheme: str = "implicit"
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    epsilon_list: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


@dataclass(frozen=True)
class InitialBlock:
    profile: str = "zero"
    amplitude: float = 1.0
    mode_k: int = 1
    path: str = ""


@dataclass(frozen=True)
class VerifyBlock:
    checks: tuple[str, ...] = CHECK_NAMES
    mu: float = 1e-2
    tol_vi: Optional[float] = None
    diag_epsilons: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    ratio_max: float = 10.0


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    dump_trajectories: bool = False
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridBlock = GridBlock()
    noise: NoiseBlock = NoiseBlock()
    solver: SolverBlock = SolverBlock()
    initial: InitialBlock = InitialBlock()
    verify: VerifyBlock = VerifyBlock()
    output: OutputBlock = OutputBlock()

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid.length, self.grid.n_interior)

    def eigen(self, grid: GridSpec) -> EigenSystem:
        return eigensystem(grid, self.noise.k_max)

    def noise_spec(self, seed: Optional[int] = None) -> NoiseSpec:
        n_steps = round(self.solver.t_final / self.solver.dt)
        return NoiseSpec(
            k_max=self.noise.k_max,
            gammas=PowerLawGammas(self.noise.gamma0, self.noise.gamma_decay),
            seed=self.noise.seed if seed is None else seed,
            t_final=self.solver.t_final,
            n_steps=n_steps,
        )

    def solver_config(self, epsilon: Optional[float] = None, scheme: Optional[str] = None):
        from .solver import SolverConfig

        return SolverConfig(
            epsilon=self.solver.epsilon if epsilon is None else epsilon,
            dt=self.solver.dt,
            t_final=self.solver.t_final,
            newton_tol=self.solver.newton_tol,
            newton_max_iter=self.solver.newton_max_iter,
            scheme=self.solver.scheme if scheme is None else scheme,
        )

    def initial_datum(self, grid: GridSpec, eigen: Optional[EigenSystem] = None) -> Field:
        block = self.initial
        if block.profile == "zero":
            return Field.zeros(grid)
        if block.profile == "bump":
            xi = grid.nodes
            return Field(grid, block.amplitude * xi * (grid.length - xi))
        if block.profile == "mode":
            if eigen is None or eigen.k_max < block.mode_k:
                eigen = eigensystem(grid, block.mode_k)
            return Field(grid, block.amplitude * eigen.eigenvectors[block.mode_k - 1])
        return _load_datum_csv(block.path, grid)


def _load_datum_csv(path: str, grid: GridSpec) -> Field:
    if not path:
        raise ConfigError("initial profile 'file' requires initial.path")
    if not os.path.exists(path):
        raise ConfigError(f"initial datum file not found: {path}")
    values = np.full(grid.n_interior, np.nan)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["node", "value"]:
            raise ConfigError(f"initial datum file must have header node,value, got {header}")
        for row in reader:
            if not row:
                continue
            try:
                node, value = int(row[0]), float(row[1])
            except ValueError as exc:
                raise ConfigError(f"bad initial datum row {row}: {exc}") from exc
            if not (1 <= node <= grid.n_interior):
                raise ConfigError(f"initial datum node {node} outside 1..{grid.n_interior}")
            values[node - 1] = value
    if np.any(np.isnan(values)):
        raise ConfigError("initial datum file does not cover every node")
    return Field(grid, values)


# ---------------------------------------------------------------------------
# parsing

def _parse_float(text: str, key: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from exc
    if not np.isfinite(value):
        raise ConfigError(f"{key}: value must be finite, got {text!r}")
    return value


def _parse_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


def _parse_bool(text: str, key: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_float_list(text: str, key: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers")
    return tuple(_parse_float(p, key) for p in parts)


def _parse_choice(text: str, key: str, choices: tuple[str, ...]) -> str:
    value = text.strip()
    if value not in choices:
        raise ConfigError(f"{key}: expected one of {choices}, got {text!r}")
    return value


def _parse_checks(text: str, key: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in parts:
        if p not in CHECK_NAMES:
            raise ConfigError(f"{key}: unknown check {p!r}, valid: {CHECK_NAMES}")
    if not parts:
        raise ConfigError(f"{key}: empty check list")
    return parts


_SECTION_KEYS = {
    "grid": {"length", "n_interior"},
    "noise": {
        "k_max",
        "gamma0",
        "gamma_decay",
        "seed",
        "n_paths",
        "continuity_alpha",
        "override_decay_check",
    },
    "solver": {
        "epsilon",
        "dt",
        "t_final",
        "scheme",
        "newton_tol",
        "newton_max_iter",
        "epsilon_list",
    },
    "initial": {"profile", "amplitude", "mode_k", "path"},
    "verify": {"checks", "mu", "tol_vi", "diag_epsilons", "ratio_max"},
    "output": {"directory", "dump_trajectories", "workers"},
}


def parse_config(path: str) -> ExperimentConfig:
    """Read and validate a config file; every key is optional."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    def get(section: str, key: str) -> Optional[str]:
        if parser.has_section(section) and key in parser[section]:
            return parser[section][key]
        return None

    def value(section, key, default, parse):
        raw = get(section, key)
        return default if raw is None else parse(raw, f"[{section}] {key}")

    grid = GridBlock(
        length=value("grid", "length", GridBlock.length, _parse_float),
        n_interior=value("grid", "n_interior", GridBlock.n_interior, _parse_int),
    )
    noise = NoiseBlock(
        k_max=value("noise", "k_max", NoiseBlock.k_max, _parse_int),
        gamma0=value("noise", "gamma0", NoiseBlock.gamma0, _parse_float),
        gamma_decay=value("noise", "gamma_decay", NoiseBlock.gamma_decay, _parse_float),
        seed=value("noise", "seed", NoiseBlock.seed, _parse_int),
        n_paths=value("noise", "n_paths", NoiseBlock.n_paths, _parse_int),
        continuity_alpha=value(
            "noise", "continuity_alpha", NoiseBlock.continuity_alpha, _parse_float
        ),
        override_decay_check=value(
            "noise", "override_decay_check", NoiseBlock.override_decay_check, _parse_bool
        ),
    )
    solver = SolverBlock(
        epsilon=value("solver", "epsilon", SolverBlock.epsilon, _parse_float),
        dt=value("solver", "dt", SolverBlock.dt, _parse_float),
        t_final=value("solver", "t_final", SolverBlock.t_final, _parse_float),
        scheme=value(
            "solver", "scheme", SolverBlock.scheme,
            lambda t, k: _parse_choice(t, k, ("implicit", "explicit")),
        ),
        newton_tol=value("solver", "newton_tol", SolverBlock.newton_tol, _parse_float),
        newton_max_iter=value(
            "solver", "newton_max_iter", SolverBlock.newton_max_iter, _parse_int
        ),
        epsilon_list=value(
            "solver", "epsilon_list", SolverBlock.epsilon_list, _parse_float_list
        ),
    )
    initial = InitialBlock(
        profile=value(
            "initial", "profile", InitialBlock.profile,
            lambda t, k: _parse_choice(t, k, PROFILES),
        ),
        amplitude=value("initial", "amplitude", InitialBlock.amplitude, _parse_float),
        mode_k=value("initial", "mode_k", InitialBlock.mode_k, _parse_int),
        path=value("initial", "path", InitialBlock.path, lambda t, k: t.strip()),
    )
    verify = VerifyBlock(
        checks=value("verify", "checks", VerifyBlock.checks, _parse_checks),
        mu=value("verify", "mu", VerifyBlock.mu, _parse_float),
        tol_vi=value("verify", "tol_vi", VerifyBlock.tol_vi, _parse_float),
        diag_epsilons=value(
            "verify", "diag_epsilons", VerifyBlock.diag_epsilons, _parse_float_list
        ),
        ratio_max=value("verify", "ratio_max", VerifyBlock.ratio_max, _parse_float),
    )
    output = OutputBlock(
        directory=value("output", "directory", OutputBlock.directory, lambda t, k: t.strip()),
        dump_trajectories=value(
            "output", "dump_trajectories", OutputBlock.dump_trajectories, _parse_bool
        ),
        workers=value("output", "workers", OutputBlock.workers, _parse_int),
    )

    cfg = ExperimentConfig(grid, noise, solver, initial, verify, output)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    try:
        grid = cfg.grid_spec()
        cfg.noise_spec()
        cfg.solver_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.noise.k_max > cfg.grid.n_interior:
        raise ConfigError(
            f"noise k_max = {cfg.noise.k_max} exceeds n_interior = {cfg.grid.n_interior}"
        )
    if cfg.noise.n_paths < 0:
        raise ConfigError("noise n_paths must be >= 0")
    if cfg.noise.continuity_alpha <= 0:
        raise ConfigError("noise continuity_alpha must be positive")
    if cfg.initial.profile == "mode" and not (1 <= cfg.initial.mode_k <= cfg.grid.n_interior):
        raise ConfigError(f"initial mode_k must lie in 1..{cfg.grid.n_interior}")
    if cfg.initial.profile == "file":
        # parse the file early so missing/ill-formed data is a config error
        cfg.initial_datum(grid)
    if cfg.verify.mu <= 0:
        raise ConfigError("verify mu must be positive")
    if cfg.verify.tol_vi is not None and cfg.verify.tol_vi <= 0:
        raise ConfigError("verify tol_vi must be positive")
    if any(e <= 0 for e in cfg.verify.diag_epsilons):
        raise ConfigError("verify diag_epsilons must be positive")
    if cfg.verify.ratio_max <= 1:
        raise ConfigError("verify ratio_max must exceed 1")
    if len(cfg.solver.epsilon_list) >= 2 and any(np.diff(cfg.solver.epsilon_list) > 0):
        raise ConfigError("solver epsilon_list must be non-increasing")
    if any(e <= 0 for e in cfg.solver.epsilon_list):
        raise ConfigError("solver epsilon_list must be positive")
    if cfg.output.workers < 1:
        raise ConfigError("output workers must be >= 1")
