"""Outer fixed point on the scalar cost proxy, trajectory simulation and checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capturability import check_capture_conditions, search_bounds
from .equilibrium import (EquilibriumSolution, GameConfig, classify_scenario,
                          closed_loop_matrix, solve_equilibrium)
from .errors import (DomainError, DynamicsFormMismatch, InnerSolveFailed, NoBracket,
                     NotHurwitz)
from .numerics import is_hurwitz, max_eig, min_eig, solve_lyapunov, symmetrize
from .prospect import CptParams, cpt_index, psi


@dataclass
class SolverOptions:
    mode: str = "corrected"
    theta: float = 0.5
    max_iter: int = 500
    tol: float = 1e-10
    kappa: float = 1.0
    bounds: tuple[float, float] | None = None
    y_floor_rel: float = 1e-8
    y_cap_rel: float = 1e6
    samples_per_decade: int = 4
    fp_tol: float = 1e-6


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dist: np.ndarray
    y_running: np.ndarray
    dt: float
    q: float
    A: np.ndarray
    form: str = "controller"
    gains: tuple | None = None
    capture_radius: float = 1e-3

    @property
    def captured(self) -> bool:
        return bool(self.dist[-1] <= self.capture_radius)

    @property
    def final_dist(self) -> float:
        return float(self.dist[-1])


@dataclass
class FixedPointResult:
    y_star: float
    bracket: tuple[float, float]
    evaluations: list
    solution: EquilibriumSolution
    brackets: list = field(default_factory=list)
    psi_constant: bool = False


def y_floor(cfg: GameConfig, rel: float = 1e-8) -> float:
    return rel * max(1.0, float(cfg.x0 @ cfg.x0))


def y_hat(y: float, cfg: GameConfig, pursuer: CptParams, evader: CptParams,
          options: SolverOptions | None = None):
    """Cost proxy x0' M x0 induced by the equilibrium at outer iterate y.

    Psi_i are evaluated with H = y, the coupled equations solved, and M taken
    from A_cl' M + M A_cl = -q I with A_cl in controller form.

    Raises
    ------
    InnerSolveFailed, NotHurwitz
    """
    opt = options or SolverOptions()
    psi1 = psi(pursuer, y)
    psi2 = psi(evader, y)
    sol = solve_equilibrium(cfg, psi1, psi2, mode=opt.mode, bounds=opt.bounds,
                            theta=opt.theta, max_iter=opt.max_iter, tol=opt.tol,
                            kappa=opt.kappa)
    M = solve_lyapunov(sol.A_cl, cfg.q * np.eye(cfg.n))
    sol.M = M
    return float(cfg.x0 @ M @ cfg.x0), sol


def _upper_bound(cfg, opt) -> float | None:
    """Explicit upper bound on the cost proxy from the decay rate of V = x'Wx/2."""
    if opt.bounds is None:
        return None
    d, D = opt.bounds
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.delta is None or d <= 0.0:
        return None
    # V(0) <= D |x0|^2 / 2, lambda_min(W) >= d, rate 2 lambda_min(Delta) d^2 / D.
    v0 = 0.5 * D * float(cfg.x0 @ cfg.x0)
    rate = 2.0 * min_eig(sc.delta) * d * d / D
    return cfg.q * v0 / (d * rate)


def solve_fixed_point(cfg: GameConfig, pursuer: CptParams, evader: CptParams,
                      options: SolverOptions | None = None) -> FixedPointResult:
    """Find y* with y_hat(y*) = y* by scanning for sign changes of g = y_hat - y.

    The scan runs on a logarithmic grid from the floor up to the explicit
    bound (when bounds are supplied) or to a cap of 1e6 |x0|^2.  Points where
    the inner problem has no admissible solution are skipped.  The smallest
    root is refined by bisection in log y; every detected bracket is reported.

    Raises
    ------
    NoBracket
        If g never changes sign between two solvable grid points.
    """
    opt = options or SolverOptions()
    lo = y_floor(cfg, opt.y_floor_rel)
    evaluations = []

    def g(y):
        try:
            val, sol = y_hat(y, cfg, pursuer, evader, opt)
        except (InnerSolveFailed, NotHurwitz) as exc:
            evaluations.append((y, None, str(exc)))
            return None, None
        evaluations.append((y, val, ""))
        return val - y, sol

    def tol_at(y):
        return opt.fp_tol * max(1.0, y)

    if pursuer.alpha == pursuer.beta == evader.alpha == evader.beta == 1.0:
        # Psi does not depend on y, so y_hat is constant and y* = y_hat(any y).
        gv, sol = g(lo)
        if gv is None:
            raise NoBracket("inner problem unsolvable for the y-independent Psi values",
                            evaluations)
        y_star = gv + lo
        sol.y_star = y_star
        return FixedPointResult(y_star, (lo, y_star), evaluations, sol,
                                [(lo, y_star)], psi_constant=True)

    hi = _upper_bound(cfg, opt)
    cap = opt.y_cap_rel * max(1.0, float(cfg.x0 @ cfg.x0))
    if hi is None or not (hi > lo):
        hi = cap
    n = max(2, int(math.ceil(opt.samples_per_decade * math.log10(hi / lo))) + 1)
    grid = np.geomspace(lo, hi, n)
    vals = [g(y)[0] for y in grid]
    brackets = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if a is None or b is None:
            continue
        if a == 0.0:
            brackets.append((grid[i], grid[i]))
        elif a * b < 0.0:
            brackets.append((grid[i], grid[i + 1]))
    if vals[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    if not brackets:
        raise NoBracket("g(y) = y_hat(y) - y has no sign change on the scan", evaluations)

    for ya, yb in brackets:
        ga, sol_a = g(ya)
        if ya == yb:
            sol_a.y_star = ya
            return FixedPointResult(ya, (ya, yb), evaluations, sol_a, brackets)
        gb, sol_b = g(yb)
        best = None
        for _ in range(200):
            ym = math.sqrt(ya * yb)
            gm, sol_m = g(ym)
            if gm is None:
                break
            if abs(gm) <= tol_at(ym):
                best = (ym, sol_m)
                break
            if (gm > 0) == (ga > 0):
                ya, ga = ym, gm
            else:
                yb, gb = ym, gm
            if yb / ya - 1.0 < 1e-15:
                break
        if best is None:
            # Accept an endpoint if it meets the tolerance (discontinuities excluded).
            for yv, gv, sv in ((ya, ga, None), (yb, gb, None)):
                if abs(gv) <= tol_at(yv):
                    _, sv = g(yv)
                    best = (yv, sv)
                    break
        if best is not None:
            y_star, sol = best
            sol.y_star = y_star
            return FixedPointResult(y_star, (ya, yb), evaluations, sol, brackets)
    raise NoBracket("sign changes found but bisection hit unsolvable points or a jump",
                    evaluations)


# --- simulation ---------------------------------------------------------------

def rk4_propagator(A, dt: float) -> np.ndarray:
    """One classical RK4 step for x' = A x written as a matrix."""
    hA = dt * np.asarray(A, dtype=float)
    I = np.eye(hA.shape[0])
    hA2 = hA @ hA
    return I + hA + hA2 / 2.0 + hA2 @ hA / 6.0 + hA2 @ hA2 / 24.0


def simulate(A, x0, dt: float = 1e-3, horizon: float = 20.0, q: float = 1.0,
             capture_radius: float = 1e-3, form: str = "controller", gains=None) -> Trajectory:
    """RK4 integration of x' = A x with y(t) = q int_0^t x'x accumulated by trapezoids."""
    if not dt > 0.0 or not horizon >= dt:
        raise DomainError("need dt > 0 and horizon >= dt")
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n = int(round(horizon / dt))
    step = rk4_propagator(A, dt)
    # Powers step^1..step^B advance B samples at once from each block start.
    B = 64
    powers = np.empty((B, A.shape[0], A.shape[0]))
    powers[0] = step
    for k in range(1, B):
        powers[k] = step @ powers[k - 1]
    states = np.empty((n + 1, A.shape[0]))
    states[0] = x0
    k = 0
    while k < n:
        m = min(B, n - k)
        states[k + 1:k + 1 + m] = powers[:m] @ states[k]
        k += m
    times = dt * np.arange(n + 1)
    sq = np.einsum("ij,ij->i", states, states)
    y = np.concatenate([[0.0], np.cumsum(0.5 * dt * q * (sq[1:] + sq[:-1]))])
    return Trajectory(times, states, np.sqrt(sq), y, dt, q, A, form, gains, capture_radius)


def tail_horizon(A, rel: float = 1e-4, minimum: float = 20.0) -> float:
    """Horizon after which the remaining integral of x'x is below ``rel`` of the total."""
    slow = -np.max(np.linalg.eigvals(np.asarray(A, dtype=float)).real)
    if slow <= 0.0:
        return minimum
    return max(minimum, 1.5 * math.log(1.0 / rel) / (2.0 * slow))


def performance_stats(traj: Trajectory, cfg: GameConfig, gains) -> tuple[float, float]:
    """Deterministic running index and the standard deviation scale sigma.

    J_run integrates x'Q_r x + u'R u - v'Pi v with u = -R^{-1} P1 x and
    v = -Pi^{-1} P2 x; sigma is the final value of the y accumulator.
    """
    P1, P2 = gains
    K = cfg.Q_r + P1 @ cfg.Rinv @ P1 - P2 @ cfg.Piinv @ P2
    s = np.einsum("ij,jk,ik->i", traj.states, K, traj.states)
    J = float(np.sum(0.5 * traj.dt * (s[1:] + s[:-1])))
    return J, float(traj.y_running[-1])


@dataclass
class MonteCarloStats:
    mean: float
    std: float
    se_mean: float
    se_std: float
    J_run: float
    sigma: float
    n: int


def monte_carlo_J(traj: Trajectory, cfg: GameConfig, gains, n: int = 100_000, seed: int = 0,
                  q: float | None = None) -> MonteCarloStats:
    """Sample J = J_run + xi * int x'x with xi ~ N(0, q^2)."""
    if n < 1000:
        raise DomainError("Monte Carlo needs n >= 1000")
    qq = cfg.q if q is None else float(q)
    J_run, sigma = performance_stats(traj, cfg, gains)
    integral = sigma / traj.q if traj.q > 0 else 0.0
    rng = np.random.default_rng(seed)
    xi = rng.normal(0.0, 1.0, n) * qq
    samples = J_run + xi * integral
    std = float(np.std(samples, ddof=1))
    return MonteCarloStats(float(np.mean(samples)), std, std / math.sqrt(n),
                           std / math.sqrt(2.0 * (n - 1)), J_run, qq * integral, n)


# --- checks ---------------------------------------------------------------------

@dataclass
class DecayReport:
    ok: bool
    form: str
    rate_bound: float | None = None
    fitted_rate: float | None = None
    r_squared: float | None = None
    first_violation: int | None = None
    worst_excess: float = 0.0
    notes: list = field(default_factory=list)


def decay_check(traj: Trajectory, d: float, D: float, Delta_S, W, form: str = "lyapunov",
                slack: float = 1e-9) -> DecayReport:
    """Exponential decay of V = x'Wx/2 along a trajectory.

    lyapunov form: V(t) <= V(0) exp(-rho t), rho = 2 lambda_min(Delta_S)
    lambda_min(W)^2 / lambda_max(W), at every sample.  controller form:
    V strictly decreasing and log V fitted by a line (rate and R^2 reported).
    """
    if traj.form != form:
        raise DynamicsFormMismatch(f"trajectory generated under {traj.form!r}, check expects {form!r}")
    W = symmetrize(W)
    V = 0.5 * np.einsum("ij,jk,ik->i", traj.states, W, traj.states)
    notes = []
    lw, uw = min_eig(W), max_eig(W)
    if lw < d - 1e-9 or uw > D + 1e-9:
        notes.append(f"W spectrum [{lw:.4g}, {uw:.4g}] outside [{d}, {D}]")
    if form == "lyapunov":
        if V[0] == 0.0:
            return DecayReport(True, form, 0.0, notes=notes)
        rho = 2.0 * min_eig(Delta_S) * lw * lw / uw
        bound = V[0] * np.exp(-rho * traj.times)
        excess = V - bound - slack * max(1.0, V[0])
        bad = np.nonzero(excess > 0.0)[0]
        return DecayReport(bad.size == 0, form, rho,
                           first_violation=int(bad[0]) if bad.size else None,
                           worst_excess=float(np.max(V - bound)), notes=notes)
    if V[0] == 0.0:
        return DecayReport(True, form, notes=notes)
    use = V > 1e-12 * V[0]
    dec = np.diff(V[use])
    bad = np.nonzero(dec >= 0.0)[0]
    t, lv = traj.times[use], np.log(V[use])
    slope, icpt = np.polyfit(t, lv, 1)
    fit = slope * t + icpt
    ss_res = float(np.sum((lv - fit) ** 2))
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayReport(bad.size == 0, form, fitted_rate=-slope, r_squared=r2,
                       first_violation=int(bad[0]) if bad.size else None, notes=notes)


@dataclass
class NashReport:
    J1: float
    J2: float
    pursuer_trials: list
    evader_trials: list
    violations: int
    tol_rel: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _random_symmetric(rng, n, magnitude):
    E = rng.normal(size=(n, n))
    E = 0.5 * (E + E.T)
    return magnitude * E / np.linalg.norm(E)


def player_indices(A, cfg, gains, pursuer, evader, dt, horizon):
    """(J1, J2, J_run, sigma) of the closed loop x' = A x."""
    T = tail_horizon(A, minimum=horizon)
    traj = simulate(A, cfg.x0, dt, T, cfg.q)
    J_run, sigma = performance_stats(traj, cfg, gains)
    return cpt_index(J_run, sigma, pursuer), cpt_index(J_run, sigma, evader), J_run, sigma


def nash_spot_check(eq: EquilibriumSolution, cfg: GameConfig, pursuer: CptParams,
                    evader: CptParams, n_perturbations: int = 20, magnitude: float = 0.01,
                    seed: int = 0, tol_rel: float = 1e-6, dt: float = 1e-3,
                    horizon: float = 20.0) -> NashReport:
    """Unilateral-deviation test around an equilibrium.

    Pursuer side: P1 -> P1 + E with P2 fixed; J1 must not drop below its
    equilibrium value.  Evader side: P2 -> P2 + E with P1 fixed; J2 must not
    rise above its equilibrium value.  Unstable perturbed loops are recorded
    and count as consistent (pursuer) or rejected (evader).
    """
    if not is_hurwitz(eq.A_cl):
        raise NotHurwitz("equilibrium closed loop is not Hurwitz", np.linalg.eigvals(eq.A_cl))
    rng = np.random.default_rng(seed)
    J1, J2, _, _ = player_indices(eq.A_cl, cfg, (eq.P1, eq.P2), pursuer, evader, dt, horizon)
    p_trials, e_trials = [], []
    violations = 0
    for _ in range(n_perturbations):
        E = _random_symmetric(rng, cfg.n, magnitude)
        P1 = eq.P1 + E
        A = closed_loop_matrix(P1, eq.P2, cfg)
        if not is_hurwitz(A):
            p_trials.append({"stable": False, "J1": math.inf, "violation": False})
        else:
            j1, _, _, _ = player_indices(A, cfg, (P1, eq.P2), pursuer, evader, dt, horizon)
            bad = j1 < J1 - tol_rel * abs(J1)
            violations += bad
            p_trials.append({"stable": True, "J1": j1, "violation": bool(bad),
                             "margin": (j1 - J1) / max(abs(J1), 1e-300)})
        E = _random_symmetric(rng, cfg.n, magnitude)
        P2 = eq.P2 + E
        A = closed_loop_matrix(eq.P1, P2, cfg)
        if not is_hurwitz(A):
            e_trials.append({"stable": False, "J2": None, "violation": False})
        else:
            _, j2, _, _ = player_indices(A, cfg, (eq.P1, P2), pursuer, evader, dt, horizon)
            bad = j2 > J2 + tol_rel * abs(J2)
            violations += bad
            e_trials.append({"stable": True, "J2": j2, "violation": bool(bad),
                             "margin": (J2 - j2) / max(abs(J2), 1e-300)})
    return NashReport(J1, J2, p_trials, e_trials, int(violations), tol_rel)


def conditions_at(result: FixedPointResult, cfg: GameConfig, mode: str = "corrected"):
    """Sufficient-condition report at the consistent Psi values, with searched bounds."""
    sol = result.solution
    bounds = search_bounds(cfg, sol.Psi1, sol.Psi2, mode)
    return check_capture_conditions(cfg, sol.Psi1, sol.Psi2, bounds, mode), bounds
