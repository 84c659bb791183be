"""Experiment configuration files.

Sectioned key-value text read with configparser::

    [game]
    q = 0.9
    Q_r = 1                 # scalar shorthand for 1 * I
    R = 0.9
    Pi = 1 0 0; 0 1 0; 0 0 1
    z10 = 0, 10, 0          # pursuer start
    z20 = 10, 15, 5         # evader start; x0 = z10 - z20 unless x0 is given

    [pursuer]               # alpha, beta, gamma, epsilon (default 1)
    [evader]
    [solver]                # mode, theta, max_iter, tol, kappa, form, d, d_upper,
                            # seed, dt, horizon, capture_radius, n_perturbations,
                            # nash_magnitude, mc_samples
    [output]                # report, trajectory, sweep
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import MODES, GameConfig
from .errors import DomainError, ParseError, ValidationError
from .numerics import min_eig, pd_tolerance
from .prospect import CptParams, validate_params

SECTIONS = ("game", "pursuer", "evader", "solver", "output")
FORMS = ("controller", "symmetric", "lyapunov")
SWEEP_PARAMS = tuple(f"{n}{i}" for i in (1, 2) for n in ("alpha", "beta", "epsilon", "gamma"))
_GAME_KEYS = {"q", "q_r", "r", "pi", "x0", "z10", "z20"}
_CPT_KEYS = {"alpha", "beta", "gamma", "epsilon"}


@dataclass
class SolverSettings:
    mode: str = "corrected"
    theta: float = 0.5
    max_iter: int = 500
    tol: float = 1e-10
    kappa: float = 1.0
    form: str = "controller"
    bounds: tuple[float, float] | None = None
    seed: int = 0
    dt: float = 1e-3
    horizon: float = 20.0
    capture_radius: float = 1e-3
    n_perturbations: int = 20
    nash_magnitude: float = 0.01
    mc_samples: int = 100_000


@dataclass
class ExperimentConfig:
    game: GameConfig
    pursuer: CptParams
    evader: CptParams
    solver: SolverSettings = field(default_factory=SolverSettings)
    output: dict = field(default_factory=dict)


@dataclass
class SweepSpec:
    param: str
    values: list
    preset: str | None = None

    def __post_init__(self):
        problems = []
        if self.param not in SWEEP_PARAMS:
            problems.append(f"sweep parameter must be one of {', '.join(SWEEP_PARAMS)}")
        if len(self.values) == 0:
            problems.append("sweep needs at least one value")
        for v in self.values:
            if not v > 0:
                problems.append(f"sweep value {v} must be positive")
            elif self.param.startswith("epsilon") and v < 1:
                problems.append(f"sweep value {v} for {self.param} must be >= 1")
            elif self.param.startswith("gamma") and v > 1:
                problems.append(f"sweep value {v} for {self.param} must be <= 1")
        if problems:
            raise ValidationError(problems)


def parse_vector(text: str) -> np.ndarray:
    parts = [t for t in re.split(r"[,\s;()\[\]]+", text.strip()) if t]
    return np.array([float(t) for t in parts])


def parse_matrix(text: str, n: int = 3) -> np.ndarray:
    """Scalar c -> c I, n numbers -> diagonal, n*n numbers -> full matrix (row major)."""
    v = parse_vector(text)
    if v.size == 1:
        return v[0] * np.eye(n)
    if v.size == n:
        return np.diag(v)
    if v.size == n * n:
        return v.reshape(n, n)
    raise ValueError(f"expected 1, {n} or {n * n} numbers, got {v.size}")


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return None


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ParseError
        Malformed syntax or a value that is not a number; the message names
        the line and field.
    ValidationError
        Values that parse but are invalid; ``violations`` lists every one.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from None

    violations = []
    for sec in cp.sections():
        if sec not in SECTIONS:
            violations.append(f"unknown section [{sec}]")
    if "game" not in cp:
        raise ValidationError(violations + ["missing required section [game]"])

    def number(sec, key, conv=float):
        raw = cp[sec][key]
        try:
            return conv(raw)
        except ValueError:
            line = _line_of(text, sec, key)
            where = f"line {line}, " if line else ""
            raise ParseError(f"{source}: {where}[{sec}] {key}: cannot parse {raw!r}") from None

    def structured(sec, key, parser):
        raw = cp[sec][key]
        try:
            return parser(raw)
        except ValueError as exc:
            line = _line_of(text, sec, key)
            where = f"line {line}, " if line else ""
            raise ParseError(f"{source}: {where}[{sec}] {key}: {exc}") from None

    g = cp["game"]
    for key in g:
        if key not in _GAME_KEYS:
            violations.append(f"game.{key}: unknown field")
    q = number("game", "q") if "q" in g else None
    if q is None:
        violations.append("game.q: required")
    elif not q > 0:
        violations.append(f"game.q: must be positive, got {q}")
    if "x0" in g:
        x0 = structured("game", "x0", parse_vector)
    elif "z10" in g and "z20" in g:
        x0 = structured("game", "z10", parse_vector) - structured("game", "z20", parse_vector)
    else:
        x0 = None
        violations.append("game.x0: give x0 or both z10 and z20")
    if x0 is not None and x0.size != 3:
        violations.append(f"game.x0: expected 3 components, got {x0.size}")
        x0 = None
    mats = {}
    for key, name in (("q_r", "Q_r"), ("r", "R"), ("pi", "Pi")):
        if key not in g:
            violations.append(f"game.{name}: required")
            continue
        M = structured("game", key, parse_matrix)
        if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max())):
            violations.append(f"game.{name}: not symmetric")
        elif min_eig(M) <= pd_tolerance(M):
            violations.append(f"game.{name}: not positive definite")
        mats[name] = M

    players = {}
    for role in ("pursuer", "evader"):
        kw = {}
        if role in cp:
            for key in cp[role]:
                if key not in _CPT_KEYS:
                    violations.append(f"{role}.{key}: unknown field")
                else:
                    kw[key] = number(role, key)
        probe = _Probe(role=role, **kw)
        bad = validate_params(probe)
        violations.extend(f"{role}: {m}" for m in bad)
        if not bad:
            players[role] = CptParams(role=role, **kw)

    solver = SolverSettings()
    if "solver" in cp:
        s = cp["solver"]
        conv = {"theta": float, "max_iter": int, "tol": float, "kappa": float, "seed": int,
                "dt": float, "horizon": float, "capture_radius": float,
                "n_perturbations": int, "nash_magnitude": float, "mc_samples": int}
        d = D = None
        for key in s:
            if key in conv:
                setattr(solver, key, number("solver", key, conv[key]))
            elif key in ("mode", "form"):
                setattr(solver, key, s[key].strip())
            elif key == "d":
                # configparser folds case, so "d" and "D" collide; use "d" and "d_upper".
                d = number("solver", key)
            elif key == "d_upper":
                D = number("solver", key)
            else:
                violations.append(f"solver.{key}: unknown field")
        if (d is None) != (D is None):
            violations.append("solver.d/d_upper: give both bounds or neither")
        elif d is not None:
            if not 0 <= d <= D:
                violations.append(f"solver.d/d_upper: need 0 <= d <= d_upper, got ({d}, {D})")
            solver.bounds = (d, D)
        if solver.mode not in MODES:
            violations.append(f"solver.mode: must be one of {', '.join(MODES)}")
        if solver.form not in FORMS:
            violations.append(f"solver.form: must be one of {', '.join(FORMS)}")
        for key in ("theta",):
            if not 0 < getattr(solver, key) <= 1:
                violations.append(f"solver.{key}: must lie in (0, 1]")
        for key in ("tol", "dt", "horizon", "capture_radius", "nash_magnitude"):
            if not getattr(solver, key) > 0:
                violations.append(f"solver.{key}: must be positive")
        for key in ("max_iter", "n_perturbations"):
            if getattr(solver, key) < 1:
                violations.append(f"solver.{key}: must be at least 1")
        if solver.mc_samples < 1000:
            violations.append("solver.mc_samples: must be at least 1000")
        if not 0 <= solver.seed < 2 ** 64:
            violations.append("solver.seed: must be an unsigned 64-bit integer")
        if solver.horizon < solver.dt:
            violations.append("solver.horizon: must be at least dt")

    output = dict(cp["output"]) if "output" in cp else {}
    for key in output:
        if key not in ("report", "trajectory", "sweep"):
            violations.append(f"output.{key}: unknown field")

    if violations:
        raise ValidationError(violations)
    try:
        game = GameConfig(mats["Q_r"], mats["R"], mats["Pi"], q, x0)
    except DomainError as exc:
        raise ValidationError([f"game: {exc}"]) from None
    return ExperimentConfig(game, players["pursuer"], players["evader"], solver, output)


@dataclass
class _Probe:
    # Unvalidated stand-in so every CPT violation can be collected at once.
    role: str
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    epsilon: float = 1.0


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_config_text(text, str(path))


def format_matrix(M) -> str:
    return "; ".join(" ".join(repr(float(v)) for v in row) for row in np.asarray(M))


def config_to_text(cfg: ExperimentConfig) -> str:
    """Inverse of parse_config_text up to formatting."""
    g = cfg.game
    lines = ["[game]", f"q = {g.q!r}", f"Q_r = {format_matrix(g.Q_r)}",
             f"R = {format_matrix(g.R)}", f"Pi = {format_matrix(g.Pi)}",
             "x0 = " + ", ".join(repr(float(v)) for v in g.x0)]
    for role, p in (("pursuer", cfg.pursuer), ("evader", cfg.evader)):
        lines += ["", f"[{role}]"] + [f"{k} = {getattr(p, k)!r}" for k in
                                        ("alpha", "beta", "gamma", "epsilon")]
    s = cfg.solver
    lines += ["", "[solver]"]
    for k in ("mode", "theta", "max_iter", "tol", "kappa", "form", "seed", "dt", "horizon",
              "capture_radius", "n_perturbations", "nash_magnitude", "mc_samples"):
        lines.append(f"{k} = {getattr(s, k)}")
    if s.bounds is not None:
        lines += [f"d = {s.bounds[0]!r}", f"d_upper = {s.bounds[1]!r}"]
    if cfg.output:
        lines += ["", "[output]"] + [f"{k} = {v}" for k, v in cfg.output.items()]
    return "\n".join(lines) + "\n"
