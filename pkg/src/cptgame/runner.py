"""End-to-end pipelines behind the command-line subcommands."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import replace

import numpy as np

from .capturability import check_rational_capture, check_capture_conditions, search_bounds
from .config import ExperimentConfig, SolverSettings, SweepSpec
from .engine import (FixedPointResult, SolverOptions, Trajectory, decay_check,
                     monte_carlo_J, nash_spot_check, performance_stats, simulate,
                     solve_fixed_point)
from .equilibrium import GameConfig, classify_scenario, closed_loop_matrix, xy_of_w
from .errors import CptGameError, NoBracket, SquareRootDomain
from .numerics import is_hurwitz, max_eig, min_eig
from .presets import PRESETS, Q_NOISE, X0
from .prospect import CptParams, chi, psi

TRAJ_HEADER = ("t", "x1", "x2", "x3", "dist", "y")
SWEEP_HEADER = ("param", "value", "scenario", "psi1", "psi2", "cond_ok", "captured",
                "final_dist", "y_star", "status")
FORM_ALIASES = {"controller": "controller",
                "lyapunov": "lyapunov", "symmetric": "symmetric"}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def solver_options(s: SolverSettings) -> SolverOptions:
    return SolverOptions(mode=s.mode, theta=s.theta, max_iter=s.max_iter, tol=s.tol,
                         kappa=s.kappa, bounds=s.bounds)


def _condition_table(rep):
    return [{"id": c.cid, "passed": bool(c.passed), "margin": c.margin, "note": c.note}
            for c in rep.conditions]


def mode_comparison(cfg: GameConfig, psi1: float, psi2: float, W) -> dict:
    """X(W) under both square-root placements and its residual X Delta X - C_X."""
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.delta is None:
        return {"applicable": False, "scenario": sc.label}
    from .equilibrium import fixed_point_operands
    CX, _ = fixed_point_operands(W, cfg, psi1, psi2, sc.label)
    out = {"applicable": True, "scenario": sc.label}
    for mode in ("corrected", "strict"):
        try:
            X, _ = xy_of_w(W, cfg, psi1, psi2, sc, mode)
        except SquareRootDomain as exc:
            out[mode] = {"error": str(exc)}
            continue
        res = float(np.linalg.norm(X @ sc.delta @ X - CX, 2))
        out[mode] = {"X": X, "X_eig_min": min_eig(X), "X_eig_max": max_eig(X), "residual": res}
    return out


def _fixed_point(exp: ExperimentConfig):
    try:
        return solve_fixed_point(exp.game, exp.pursuer, exp.evader, solver_options(exp.solver)), None
    except NoBracket as exc:
        samples = [{"y": y, "y_hat": v, "error": e} for y, v, e in exc.samples]
        return None, {"error": "NoBracket", "message": str(exc), "samples": samples}


def _conditions(exp, fp: FixedPointResult):
    sol = fp.solution
    bounds = exp.solver.bounds
    if bounds is None:
        bounds = search_bounds(exp.game, sol.Psi1, sol.Psi2, exp.solver.mode)
    rep = check_capture_conditions(exp.game, sol.Psi1, sol.Psi2, bounds, exp.solver.mode)
    return rep, bounds


def trajectory_for(exp: ExperimentConfig, fp: FixedPointResult, form: str | None = None,
                   dt: float | None = None, horizon: float | None = None) -> Trajectory:
    s = exp.solver
    form = FORM_ALIASES[form or s.form]
    sol = fp.solution
    A = closed_loop_matrix(sol.P1, sol.P2, exp.game, form)
    return simulate(A, exp.game.x0, dt or s.dt, horizon or s.horizon, exp.game.q,
                    s.capture_radius, form, (sol.P1, sol.P2))


def evaluate(exp: ExperimentConfig, full: bool = True) -> dict:
    """Fixed point, conditions, simulation and (when ``full``) the spot checks.

    Raises only on errors other than a missing fixed point, which is reported
    as a no-capture verdict.
    """
    cfg, s = exp.game, exp.solver
    sc = classify_scenario(cfg.R, cfg.Pi)
    rational = check_rational_capture(cfg.R, cfg.Pi)
    report = {"scenario": sc.label, "mode": s.mode, "form": s.form,
              "rational_test": {"ok": bool(rational.ok), "margin": rational.margin},
              "x0": cfg.x0, "q": cfg.q}
    fp, diag = _fixed_point(exp)
    if fp is None:
        report.update(verdict="no-capture", captured=False, diagnostics=diag,
                      fixed_point=None, conditions=None)
        return report
    sol = fp.solution
    cond, bounds = _conditions(exp, fp)
    traj = trajectory_for(exp, fp)
    report.update(
        psi1=sol.Psi1, psi2=sol.Psi2, P1=sol.P1, P2=sol.P2, A_cl=sol.A_cl,
        method=sol.method, residuals=[sol.residual1, sol.residual2],
        fixed_point={"y_star": fp.y_star, "bracket": fp.bracket,
                     "brackets": fp.brackets, "evaluations": len(fp.evaluations),
                     "psi_constant": fp.psi_constant},
        conditions={"bounds": bounds, "overall": bool(cond.overall),
                    "table": _condition_table(cond), "scenario": cond.scenario},
        simulation={"dt": traj.dt, "horizon": float(traj.times[-1]),
                    "final_dist": traj.final_dist, "y_final": float(traj.y_running[-1]),
                    "captured": traj.captured, "capture_radius": traj.capture_radius},
        captured=traj.captured,
        verdict="capture" if traj.captured else "no-capture",
    )
    if not full:
        report["_trajectory"] = traj
        return report
    report["mode_comparison"] = mode_comparison(cfg, sol.Psi1, sol.Psi2, sol.W)
    report["decay"] = _decay(exp, fp, traj, bounds, sc)
    gains = (sol.P1, sol.P2)
    if is_hurwitz(traj.A):
        J_run, sigma = performance_stats(traj, cfg, gains)
        mc = monte_carlo_J(traj, cfg, gains, s.mc_samples, s.seed)
        report["performance"] = {"J_run": J_run, "sigma": sigma, "mc_mean": mc.mean,
                                 "mc_std": mc.std, "mc_se_mean": mc.se_mean,
                                 "mc_samples": mc.n, "seed": s.seed}
    if is_hurwitz(sol.A_cl):
        mag = s.nash_magnitude * float(np.linalg.norm(sol.P1))
        nash = nash_spot_check(sol, cfg, exp.pursuer, exp.evader, s.n_perturbations, mag,
                               s.seed, dt=s.dt, horizon=s.horizon)
        report["nash"] = {"J1": nash.J1, "J2": nash.J2, "violations": nash.violations,
                          "magnitude": mag, "n_perturbations": s.n_perturbations,
                          "pursuer_trials": nash.pursuer_trials,
                          "evader_trials": nash.evader_trials}
    report["_trajectory"] = traj
    return report


def _decay(exp, fp, traj, bounds, sc):
    sol = fp.solution
    form = FORM_ALIASES[exp.solver.form]
    if form == "lyapunov":
        W = sol.W
        if sc.delta is None or min_eig(W) <= 0:
            return {"applicable": False, "reason": "needs S1/S2 and W positive definite"}
        d, D = bounds if bounds is not None else (min_eig(W), max_eig(W))
        rep = decay_check(traj, d, D, sc.delta, W, "lyapunov")
        return {"applicable": True, "ok": rep.ok, "form": form, "rate_bound": rep.rate_bound,
                "first_violation": rep.first_violation, "notes": rep.notes}
    if form == "controller" and sol.M is not None:
        M = sol.M
        rep = decay_check(traj, min_eig(M), max_eig(M), np.eye(exp.game.n), M, "controller")
        return {"applicable": True, "ok": rep.ok, "form": form, "weight": "lyapunov M",
                "fitted_rate": rep.fitted_rate, "r_squared": rep.r_squared,
                "first_violation": rep.first_violation}
    return {"applicable": False, "reason": f"no decay check for form {form}"}


# --- trajectory CSV -------------------------------------------------------------

def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    data = np.column_stack([traj.times, traj.states, traj.dist, traj.y_running])
    buf.write(",".join(TRAJ_HEADER) + "\n")
    np.savetxt(buf, data, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def write_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trajectory_csv(traj))


def read_trajectory(path, q: float = math.nan, A=None, form: str = "controller",
                    capture_radius: float = 1e-3) -> Trajectory:
    """Rebuild a Trajectory from its CSV; numeric fields round-trip exactly."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TRAJ_HEADER:
            raise ValueError(f"unexpected trajectory header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    times = data[:, 0].copy()
    dt = float(times[1] - times[0]) if len(times) > 1 else math.nan
    return Trajectory(times, data[:, 1:4].copy(), data[:, 4].copy(), data[:, 5].copy(), dt, q,
                      A, form, None, capture_radius)


# --- subcommands ----------------------------------------------------------------

def run_solve(exp: ExperimentConfig) -> dict:
    rep = evaluate(exp, full=True)
    rep.pop("_trajectory", None)
    return rep


def run_check(exp: ExperimentConfig) -> dict:
    """Scenario, rational test and sufficient conditions at the consistent Psi values.

    Without a consistent fixed point the conditions are evaluated at Psi(H)
    with H = |x0|^2.
    """
    cfg, s = exp.game, exp.solver
    sc = classify_scenario(cfg.R, cfg.Pi)
    rational = check_rational_capture(cfg.R, cfg.Pi)
    fp, diag = _fixed_point(exp)
    if fp is not None:
        p1, p2, at = fp.solution.Psi1, fp.solution.Psi2, "fixed point"
    else:
        H = float(cfg.x0 @ cfg.x0)
        p1, p2, at = psi(exp.pursuer, H), psi(exp.evader, H), "H = |x0|^2"
    bounds = s.bounds if s.bounds is not None else search_bounds(cfg, p1, p2, s.mode)
    rep = check_capture_conditions(cfg, p1, p2, bounds, s.mode)
    return {"scenario": sc.label,
            "rational_test": {"ok": bool(rational.ok), "margin": rational.margin},
            "psi1": p1, "psi2": p2, "evaluated_at": at, "bounds": bounds,
            "overall": bool(rep.overall), "table": _condition_table(rep),
            "notes": rep.notes, "fixed_point_diagnostics": diag}


def run_simulate(exp: ExperimentConfig, dt=None, horizon=None, form=None):
    """Returns (trajectory, summary dict); trajectory is None without a fixed point."""
    fp, diag = _fixed_point(exp)
    if fp is None:
        return None, {"verdict": "no-capture", "diagnostics": diag}
    traj = trajectory_for(exp, fp, form, dt, horizon)
    return traj, {"verdict": "captured" if traj.captured else "escaped",
                  "final_dist": traj.final_dist, "y_final": float(traj.y_running[-1]),
                  "y_star": fp.y_star, "steps": len(traj.times) - 1}


def with_param(exp: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    name, idx = param[:-1], param[-1]
    role = "pursuer" if idx == "1" else "evader"
    player = replace(getattr(exp, role), **{name: float(value)})
    return replace(exp, **{role: player})


def preset_config(name: str, solver: SolverSettings | None = None) -> ExperimentConfig:
    p = PRESETS[name]
    Q, R, Pi = p.matrices()
    return ExperimentConfig(GameConfig(Q, R, Pi, Q_NOISE, X0), CptParams(role="pursuer"),
                            CptParams(role="evader"), solver or SolverSettings(), {})


def sweep_row(exp: ExperimentConfig, param: str, value: float, label: str | None = None) -> dict:
    sc = classify_scenario(exp.game.R, exp.game.Pi).label
    scenario = sc if label is None or label == sc else f"{sc} (preset says {label})"
    row = dict.fromkeys(SWEEP_HEADER, "")
    row.update(param=param, value=value, scenario=scenario)
    try:
        rep = evaluate(with_param(exp, param, value), full=False)
    except CptGameError as exc:
        row.update(cond_ok=False, captured=False, status=f"error: {type(exc).__name__}")
        return row
    if rep["fixed_point"] is None:
        row.update(cond_ok=False, captured=False, status="no fixed point")
        return row
    row.update(psi1=rep["psi1"], psi2=rep["psi2"], cond_ok=rep["conditions"]["overall"],
               captured=rep["captured"], final_dist=rep["simulation"]["final_dist"],
               y_star=rep["fixed_point"]["y_star"], status="ok")
    return row


def run_sweep(exp: ExperimentConfig | None, spec: SweepSpec) -> list[dict]:
    """One row per value; failures land in the status column."""
    label = None
    if spec.preset is not None:
        base = preset_config(spec.preset, exp.solver if exp else None)
        label = PRESETS[spec.preset].label
    else:
        base = exp
    return [sweep_row(base, spec.param, v, label) for v in spec.values]


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in SWEEP_HEADER])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def run_chi(alpha: float, beta: float, gamma: float) -> dict:
    # Role only affects sign conventions, not the integrals; evader bounds are wider.
    p = CptParams(alpha=alpha, beta=beta, gamma=gamma, role="evader")
    c = chi(p)
    return {"alpha": alpha, "beta": beta, "gamma": gamma, "chi_plus": c.chi_plus,
            "chi_minus": c.chi_minus, "err_plus": c.err_plus, "err_minus": c.err_minus}
