"""Riccati solvers for the rational and CPT-perturbed pursuit-evasion game.

Notation: r = R^{-1}, p = Pi^{-1}, A_i = Q_r + Psi_i q I.  The coupled
equations solved here are

    E1: 4 A_1 - P1 r P1 - P2 p P2 - P1 p P2 - P2 p P1 = 0
    E2: 4 A_2 + P1 r P1 + P2 p P2 + P2 r P1 + P1 r P2 = 0

with P1 > 0 and P2 < 0.  Writing X = P1, Y = -P2 and W = P1 + P2 they become
X Delta X = C_X(W), Y Delta Y = C_Y(W), which gives the fixed-point map
T(W) = X(W) - Y(W).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (DomainError, GuardViolated, InconsistentScenario3, InnerSolveFailed,
                     NoConvergence, NotPositiveDefinite, NotScenario1, PairingInfeasible,
                     ResidualTooLarge, SquareRootDomain)
from .numerics import (congruence_sqrt, is_scalar_identity, max_eig, min_eig,
                       naive_congruence_sqrt, pd_tolerance, sym_inv, sym_inv_sqrt,
                       sym_sqrt, symmetrize)

MODES = ("corrected", "strict")
FORMS = ("controller", "symmetric", "lyapunov")


@dataclass
class GameConfig:
    """Dynamics and cost data of one game instance."""

    Q_r: np.ndarray
    R: np.ndarray
    Pi: np.ndarray
    q: float
    x0: np.ndarray

    def __post_init__(self):
        self.Q_r = symmetrize(np.atleast_2d(np.asarray(self.Q_r, dtype=float)))
        self.R = symmetrize(np.atleast_2d(np.asarray(self.R, dtype=float)))
        self.Pi = symmetrize(np.atleast_2d(np.asarray(self.Pi, dtype=float)))
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        self.q = float(self.q)
        problems = []
        for name in ("Q_r", "R", "Pi"):
            M = getattr(self, name)
            if M.shape != (self.n, self.n):
                problems.append(f"{name} has shape {M.shape}, expected {(self.n, self.n)}")
            elif min_eig(M) <= pd_tolerance(M):
                problems.append(f"{name} must be positive definite")
        if not self.q > 0.0:
            problems.append(f"q must be positive, got {self.q}")
        if problems:
            raise DomainError("; ".join(problems))
        self.Rinv = sym_inv(self.R)
        self.Piinv = sym_inv(self.Pi)

    @property
    def n(self) -> int:
        return self.x0.size

    def A(self, psi: float) -> np.ndarray:
        return self.Q_r + psi * self.q * np.eye(self.n)

    @property
    def res_scale(self) -> float:
        return max(1.0, float(np.linalg.norm(4.0 * self.Q_r)))

    @property
    def isotropic_controls(self) -> bool:
        return is_scalar_identity(self.R) and is_scalar_identity(self.Pi)


@dataclass
class Scenario:
    label: str  # "S1", "S2", "S3" or "Unclassified"
    delta: np.ndarray | None
    diff: np.ndarray


@dataclass
class EquilibriumSolution:
    P1: np.ndarray
    P2: np.ndarray
    Psi1: float
    Psi2: float
    A_cl: np.ndarray
    residual1: float
    residual2: float
    iterations: int = 0
    method: str = ""
    scenario: str = ""
    mode: str = "corrected"
    y_star: float | None = None
    M: np.ndarray | None = None
    notes: list = field(default_factory=list)

    @property
    def W(self) -> np.ndarray:
        return symmetrize(self.P1 + self.P2)


def classify_scenario(R, Pi) -> Scenario:
    """Label the control-weight regime by the sign of R^{-1} - Pi^{-1}."""
    Rinv, Piinv = sym_inv(R), sym_inv(Pi)
    diff = symmetrize(Rinv - Piinv)
    scale = max(np.linalg.norm(Rinv), np.linalg.norm(Piinv))
    if np.linalg.norm(diff) <= 1e-10 * scale:
        return Scenario("S3", None, diff)
    lam = np.linalg.eigvalsh(diff)
    tol = pd_tolerance(diff)
    if lam[0] > tol:
        return Scenario("S1", diff, diff)
    if lam[-1] < -tol:
        return Scenario("S2", -diff, diff)
    return Scenario("Unclassified", None, diff)


def solve_rational(cfg: GameConfig) -> np.ndarray:
    """P solving Q_r - P R^{-1} P + P Pi^{-1} P = 0 with P > 0.

    Raises
    ------
    NotScenario1
        When R^{-1} - Pi^{-1} is not positive definite (no capture for the
        rational game).
    """
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.label != "S1":
        raise NotScenario1(f"R^-1 - Pi^-1 is not positive definite (scenario {sc.label})")
    return congruence_sqrt(cfg.Q_r, sc.delta)


def coupled_residuals(P1, P2, cfg: GameConfig, psi1: float, psi2: float):
    """Left-hand sides of the two coupled CPT Riccati equations."""
    r, p = cfg.Rinv, cfg.Piinv
    E1 = 4.0 * cfg.A(psi1) - P1 @ r @ P1 - P2 @ p @ P2 - P1 @ p @ P2 - P2 @ p @ P1
    E2 = 4.0 * cfg.A(psi2) + P1 @ r @ P1 + P2 @ p @ P2 + P2 @ r @ P1 + P1 @ r @ P2
    return E1, E2


def residual_norms(P1, P2, cfg, psi1, psi2) -> tuple[float, float]:
    E1, E2 = coupled_residuals(P1, P2, cfg, psi1, psi2)
    return float(np.linalg.norm(E1)), float(np.linalg.norm(E2))


def closed_loop_matrix(P1, P2, cfg: GameConfig, form: str = "controller") -> np.ndarray:
    """Closed-loop state matrix of x' = u - v under the feedback pair.

    controller: u = -R^{-1} P1 x, v = -Pi^{-1} P2 x  ->  -R^{-1}P1 + Pi^{-1}P2
    symmetric:    -R^{-1}P1 - Pi^{-1}P2
    lyapunov:  -Delta_S (P1 + P2)
    """
    if form == "controller":
        return -cfg.Rinv @ P1 + cfg.Piinv @ P2
    if form == "symmetric":
        return -cfg.Rinv @ P1 - cfg.Piinv @ P2
    if form == "lyapunov":
        sc = classify_scenario(cfg.R, cfg.Pi)
        if sc.delta is None:
            raise DomainError(f"lyapunov form needs scenario S1 or S2, got {sc.label}")
        return -sc.delta @ (P1 + P2)
    raise DomainError(f"unknown closed-loop form {form!r}")


# --- fixed-point map --------------------------------------------------------

_OPERAND_IDS = {"S1": ("S1.x_defined", "S1.y_defined"), "S2": ("S2.x_defined", "S2.y_defined")}


def fixed_point_operands(W, cfg: GameConfig, psi1: float, psi2: float, label: str):
    """Right-hand sides C_X(W), C_Y(W) of X Delta X = C_X and Y Delta Y = C_Y."""
    W = symmetrize(W)
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    wpw = W @ cfg.Piinv @ W
    wrw = W @ cfg.Rinv @ W
    if label == "S1":
        return 4.0 * A1 - wpw, wrw + 4.0 * A2
    if label == "S2":
        return wpw - 4.0 * A1, -4.0 * A2 - wrw
    raise DomainError(f"fixed-point map needs scenario S1 or S2, got {label}")


def _root(C, Delta, mode):
    if mode == "corrected":
        return congruence_sqrt(C, Delta)
    if mode == "strict":
        return naive_congruence_sqrt(C, Delta)
    raise DomainError(f"unknown mode {mode!r}")


def xy_of_w(W, cfg, psi1, psi2, scenario: Scenario, mode: str = "corrected"):
    """X(W), Y(W) of the fixed-point construction.

    Raises
    ------
    SquareRootDomain
        If either operand is not positive definite; the condition id of the
        matching well-definedness inequality is attached.
    """
    CX, CY = fixed_point_operands(W, cfg, psi1, psi2, scenario.label)
    ids = _OPERAND_IDS[scenario.label]
    for C, cid, name in ((CX, ids[0], "X"), (CY, ids[1], "Y")):
        m = min_eig(C)
        if m <= pd_tolerance(C):
            raise SquareRootDomain(
                f"{name} operand not positive definite (condition {cid}, min eig {m:.3e})",
                condition=cid, margin=m)
    return _root(CX, scenario.delta, mode), _root(CY, scenario.delta, mode)


def brouwer_map(W, cfg, psi1, psi2, scenario: Scenario, mode: str = "corrected"):
    """T(W) = X(W) - Y(W)."""
    X, Y = xy_of_w(W, cfg, psi1, psi2, scenario, mode)
    return symmetrize(X - Y)


def _scalar_window(cfg, psi1, psi2, label):
    """Interval (lo, hi) of w^2 for which W = w I keeps both operands definite."""
    A1, A2 = cfg.A(psi1), cfg.A(psi2)

    def gen(C, B):  # eigenvalues of B^{-1/2} C B^{-1/2}
        Bi = sym_inv_sqrt(B)
        return np.linalg.eigvalsh(symmetrize(Bi @ C @ Bi))

    if label == "S1":
        lo = gen(-4.0 * A2, cfg.Rinv)[-1]
        hi = gen(4.0 * A1, cfg.Piinv)[0]
    else:
        lo = gen(4.0 * A1, cfg.Piinv)[-1]
        hi = gen(-4.0 * A2, cfg.Rinv)[0]
    return lo, hi


def _damped_iteration(W0, cfg, psi1, psi2, scenario, mode, theta, max_iter, tol):
    W = symmetrize(W0)
    T = brouwer_map(W, cfg, psi1, psi2, scenario, mode)
    res = float(np.linalg.norm(T - W))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NoConvergence(f"damped iteration stopped at residual {res:.3e} after {it} steps")
        it += 1
        Wn = (1.0 - theta) * W + theta * T
        try:
            Tn = brouwer_map(Wn, cfg, psi1, psi2, scenario, mode)
        except SquareRootDomain:
            theta *= 0.5
            if theta < 1e-6:
                raise NoConvergence("damped iteration left the domain of the map")
            continue
        resn = float(np.linalg.norm(Tn - Wn))
        if resn > res:
            theta = max(0.5 * theta, 1e-3)
        W, T, res = Wn, Tn, resn
    return W, it


def _make_solution(P1, P2, cfg, psi1, psi2, method, scenario, mode, iterations=0,
                   form="controller"):
    P1, P2 = symmetrize(P1), symmetrize(P2)
    r1, r2 = residual_norms(P1, P2, cfg, psi1, psi2)
    return EquilibriumSolution(P1=P1, P2=P2, Psi1=psi1, Psi2=psi2,
                               A_cl=closed_loop_matrix(P1, P2, cfg, form),
                               residual1=r1, residual2=r2, iterations=iterations,
                               method=method, scenario=scenario, mode=mode)


def _admissible(P1, P2, cfg, psi1, psi2, res_tol=1e-8) -> bool:
    if min_eig(P1) <= pd_tolerance(P1) or max_eig(P2) >= -pd_tolerance(P2):
        return False
    r1, r2 = residual_norms(P1, P2, cfg, psi1, psi2)
    return max(r1, r2) <= res_tol * cfg.res_scale


def solve_coupled(cfg: GameConfig, psi1: float, psi2: float, d: float, D: float,
                  mode: str = "corrected", theta: float = 0.5, max_iter: int = 500,
                  tol: float = 1e-10) -> EquilibriumSolution:
    """Damped fixed-point iteration on T started at ((d + D)/2) I.

    The guards (well-definedness of the map on [dI, DI]) are checked first.
    In corrected mode the recovered pair must satisfy both coupled equations
    to 1e-8 relative; strict mode reports its residuals without enforcing them.
    """
    if not (0.0 <= d <= D):
        raise DomainError(f"need 0 <= d <= D, got d={d}, D={D}")
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.label not in ("S1", "S2"):
        raise DomainError(f"solve_coupled needs scenario S1 or S2, got {sc.label}")
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    if sc.label == "S1":
        guards = (("S1.x_defined", 4.0 * A1 - D * D * cfg.Piinv),
                  ("S1.y_defined", d * d * cfg.Rinv + 4.0 * A2))
    else:
        guards = (("S2.x_defined", d * d * cfg.Piinv - 4.0 * A1),
                  ("S2.y_defined", -4.0 * A2 - D * D * cfg.Rinv))
    for cid, C in guards:
        m = min_eig(C)
        if m <= pd_tolerance(C):
            raise GuardViolated(f"condition {cid} fails for (d, D) = ({d}, {D}): margin {m:.3e}")
    W0 = 0.5 * (d + D) * np.eye(cfg.n)
    W, it = _damped_iteration(W0, cfg, psi1, psi2, sc, mode, theta, max_iter, tol)
    X, Y = xy_of_w(W, cfg, psi1, psi2, sc, mode)
    sol = _make_solution(X, -Y, cfg, psi1, psi2, "brouwer", sc.label, mode, it)
    if mode == "corrected" and max(sol.residual1, sol.residual2) > 1e-8 * cfg.res_scale:
        raise ResidualTooLarge(
            f"fixed point does not solve the coupled equations: {sol.residual1:.3e}, {sol.residual2:.3e}")
    return sol


# --- isotropic controls: exact per-direction reduction ----------------------

def solve_isotropic(cfg: GameConfig, psi1: float, psi2: float) -> EquilibriumSolution:
    """Exact solution when R and Pi are multiples of the identity.

    In the eigenbasis of Q_r the coupled equations decouple into scalar pairs
    with x = P1 > 0, y = -P2 > 0.  Adding them gives x y = k, and the first
    becomes r x^4 - (a + 2 p k) x^2 + p k^2 = 0.  Per direction the root with
    the largest x - y is kept, which maximizes lambda_min(P1 + P2).
    """
    if not cfg.isotropic_controls:
        raise DomainError("solve_isotropic needs R and Pi proportional to the identity")
    r = float(cfg.Rinv[0, 0])
    p = float(cfg.Piinv[0, 0])
    if abs(r - p) <= 1e-10 * max(r, p):
        raise DomainError("equal control weights; use scenario3_solution")
    lam, V = np.linalg.eigh(cfg.Q_r)
    xs, ys = [], []
    for lj in lam:
        a = 4.0 * (lj + psi1 * cfg.q)
        b = 4.0 * (lj + psi2 * cfg.q)
        k = (a + b) / (2.0 * (r - p))
        if not k > 0.0:
            raise InnerSolveFailed(f"no solution with P1 > 0 > P2: x*y = {k:.4g} is not positive")
        c = a + 2.0 * p * k
        disc = c * c - 4.0 * r * p * k * k
        if disc < 0.0:
            raise InnerSolveFailed(f"no real solution (discriminant {disc:.4g})")
        sq = np.sqrt(disc)
        best = None
        for u in ((c + sq) / (2.0 * r), (c - sq) / (2.0 * r)):
            if u > 0.0:
                x = np.sqrt(u)
                y = k / x
                if best is None or x - y > best[0] - best[1]:
                    best = (x, y)
        if best is None:
            raise InnerSolveFailed("no positive root of the per-direction quartic")
        xs.append(best[0])
        ys.append(best[1])
    P1 = (V * np.array(xs)) @ V.T
    P2 = -(V * np.array(ys)) @ V.T
    sc = classify_scenario(cfg.R, cfg.Pi)
    return _make_solution(P1, P2, cfg, psi1, psi2, "isotropic", sc.label, "corrected")


# --- stacked orthogonal construction ----------------------------------------

def stacked_matrices(cfg: GameConfig):
    r, p = cfg.Rinv, cfg.Piinv
    S1 = np.block([[r, p], [p, p]])
    S2 = np.block([[r, r], [r, p]])
    return symmetrize(S1), symmetrize(S2)


def _pair_columns(G, H, n):
    """Orthonormal columns u_j with u_j' G u_j = mu_j and u_i' G u_j = 0 (i != j).

    Returns a list of candidate (U_paired, per-column options) structures:
    each column j carries two basis vectors (va, vb) and the mixing angle.
    """
    lam, V = np.linalg.eigh(G)
    mu, E = np.linalg.eigh(H)
    tol = 1e-9 * max(1.0, np.max(np.abs(lam)))
    columns = []
    # Structured attempt: restrict G to span{[e_j;0],[0;e_j]}.  Exact whenever
    # those planes are G-invariant (commuting data), which also keeps the
    # recovered blocks symmetric.
    structured = []
    for j in range(n):
        B = np.zeros((2 * n, 2))
        B[:n, 0] = E[:, j]
        B[n:, 1] = E[:, j]
        GB = G @ B
        if np.linalg.norm(GB - B @ (B.T @ GB)) > 1e-9 * max(1.0, np.linalg.norm(G)):
            structured = None
            break
        l2, F = np.linalg.eigh(B.T @ GB)
        structured.append((B @ F[:, 0], B @ F[:, 1], l2[0], l2[1], mu[j]))
    if structured is not None:
        columns.append(structured)
    # Generic greedy pairing on the spectrum of G.
    used = set()
    generic = []
    for j in range(n):
        target = np.zeros((2 * n, 2))
        target[:n, 0] = E[:, j]
        target[n:, 1] = E[:, j]

        def align(idx):
            return float(np.sum((target.T @ V[:, idx]) ** 2))

        free = [i for i in range(2 * n) if i not in used]
        single = [i for i in free if abs(lam[i] - mu[j]) <= tol]
        if single:
            a = max(single, key=align)
            used.add(a)
            generic.append((V[:, a], V[:, a], lam[a], lam[a], mu[j]))
            continue
        pairs = [(a, b) for a in free for b in free
                 if lam[a] < mu[j] < lam[b]]
        if not pairs:
            generic = None
            break
        a, b = max(pairs, key=lambda ab: align(ab[0]) + align(ab[1]))
        used.update((a, b))
        generic.append((V[:, a], V[:, b], lam[a], lam[b], mu[j]))
    if generic is not None:
        columns.append(generic)
    return columns, E


def _stacked_construction(S_pd, S_other, A_pd, A_other, cfg, psi1, psi2):
    n = cfg.n
    try:
        Si = sym_inv_sqrt(S_pd)
        Ah = sym_sqrt(4.0 * A_pd)
        Aih = sym_inv_sqrt(A_pd)
    except NotPositiveDefinite as exc:
        raise PairingInfeasible(f"stacked construction precondition fails: {exc}") from None
    G = symmetrize(Si @ S_other @ Si)
    H = symmetrize(Aih @ A_other @ Aih)
    structures, E = _pair_columns(G, H, n)
    if not structures:
        raise PairingInfeasible("no eigenvalue pairing between G and H")
    best = None
    for cols in structures:
        base = []
        for va, vb, la, lb, m in cols:
            if lb - la <= 1e-14:
                c, s = 1.0, 0.0
            else:
                c = np.sqrt(np.clip((lb - m) / (lb - la), 0.0, 1.0))
                s = np.sqrt(np.clip((m - la) / (lb - la), 0.0, 1.0))
            base.append((va, vb, c, s))
        for signs in itertools.product((1.0, -1.0), repeat=2 * n):
            Up = np.column_stack([signs[2 * j] * (c * va + signs[2 * j + 1] * s * vb)
                                  for j, (va, vb, c, s) in enumerate(base)])
            U = Up @ E.T
            P = Si @ U @ Ah
            P1, P2 = P[:n], P[n:]
            scale = max(1.0, np.linalg.norm(P))
            if (np.linalg.norm(P1 - P1.T) > 1e-8 * scale
                    or np.linalg.norm(P2 - P2.T) > 1e-8 * scale):
                continue
            P1, P2 = symmetrize(P1), symmetrize(P2)
            if not _admissible(P1, P2, cfg, psi1, psi2):
                continue
            score = min_eig(P1 + P2)
            if best is None or score > best[0] + 1e-12:
                best = (score, P1, P2, U, G, H)
    if best is None:
        raise ResidualTooLarge("no sign choice of the paired columns solves the coupled equations")
    return best[1], best[2], best[3], best[4], best[5]


def solve_stacked(cfg: GameConfig, psi1: float, psi2: float, return_factors: bool = False):
    """Stacked orthogonal construction P = S1^{-1/2} U (4 A_1)^{1/2}.

    With the stacked unknown P = [P1; P2] the coupled equations read
    P' S1 P = 4 A_1 and P' S2 P = -4 A_2.  Any column-orthonormal U with
    U' G U = H, G = S1^{-1/2} S2 S1^{-1/2}, H = A_1^{-1/2}(-A_2)A_1^{-1/2},
    yields a solution; U is built by spectral pairing.

    Requires S1 > 0 (equivalently R^{-1} - Pi^{-1} > 0) and A_1 > 0.
    """
    S1, S2 = stacked_matrices(cfg)
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    P1, P2, U, G, H = _stacked_construction(S1, S2, A1, -A2, cfg, psi1, psi2)
    if return_factors:
        return P1, P2, U, G, H
    return P1, P2


def solve_stacked_mirror(cfg: GameConfig, psi1: float, psi2: float, return_factors: bool = False):
    """Mirror of the stacked construction for Pi^{-1} - R^{-1} > 0.

    Uses S2 > 0 and -A_2 > 0: P = S2^{-1/2} U (-4 A_2)^{1/2} with
    U' G U = H, G = S2^{-1/2} S1 S2^{-1/2}, H = (-A_2)^{-1/2} A_1 (-A_2)^{-1/2}.
    """
    S1, S2 = stacked_matrices(cfg)
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    P1, P2, U, G, H = _stacked_construction(S2, S1, -A2, A1, cfg, psi1, psi2)
    if return_factors:
        return P1, P2, U, G, H
    return P1, P2


# --- equal control weights ---------------------------------------------------

def scenario3_balance(cfg: GameConfig, psi1: float, psi2: float) -> dict:
    """Both forms of the balance condition for R = Pi.

    ``sum_form`` is 2 Q_r + (Psi1 + Psi2) q I, which follows from adding the
    two reduced equations; ``difference_form`` is 2 Q_r + (Psi1 - Psi2) q I.
    Values are Frobenius norms.
    """
    I = np.eye(cfg.n)
    return {
        "sum_form": float(np.linalg.norm(2.0 * cfg.Q_r + (psi1 + psi2) * cfg.q * I)),
        "difference_form": float(np.linalg.norm(2.0 * cfg.Q_r + (psi1 - psi2) * cfg.q * I)),
    }


def scenario3_solution(cfg: GameConfig, psi1: float, psi2: float, kappa: float = 1.0):
    """(P1, P2) = (S + kappa I, -kappa I) with S R^{-1} S = 4 A_1.

    When R = Pi both equations only involve W = P1 + P2, so the split between
    the players is free; kappa > 0 keeps the sign constraints.
    """
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.label != "S3":
        raise DomainError(f"scenario3_solution needs R = Pi, got {sc.label}")
    bal = scenario3_balance(cfg, psi1, psi2)
    tol = 1e-10 * cfg.res_scale
    if 2.0 * bal["sum_form"] > tol:
        raise InconsistentScenario3(
            "balance condition fails: ||4A1 + 4A2|| = {:.3e}; difference form residual {:.3e}".format(
                2.0 * bal["sum_form"], bal["difference_form"]))
    A1 = cfg.A(psi1)
    if min_eig(A1) <= pd_tolerance(A1):
        raise NotPositiveDefinite("Q_r + Psi1 q I must be positive definite")
    S = 2.0 * congruence_sqrt(A1, cfg.Rinv)
    I = np.eye(cfg.n)
    return symmetrize(S + kappa * I), -kappa * I


# --- dispatcher --------------------------------------------------------------

def _newton(cfg, psi1, psi2, P1_0, P2_0):
    n = cfg.n
    iu = np.triu_indices(n)

    def unpack(z):
        P1 = np.zeros((n, n))
        P2 = np.zeros((n, n))
        m = len(iu[0])
        P1[iu] = z[:m]
        P2[iu] = z[m:]
        return symmetrize(P1 + np.triu(P1, 1).T), symmetrize(P2 + np.triu(P2, 1).T)

    def fun(z):
        P1, P2 = unpack(z)
        E1, E2 = coupled_residuals(P1, P2, cfg, psi1, psi2)
        return np.concatenate([E1[iu], E2[iu]])

    z0 = np.concatenate([P1_0[iu], P2_0[iu]])
    sol = optimize.root(fun, z0, method="hybr", options={"xtol": 1e-14, "maxfev": 400 * z0.size})
    P1, P2 = unpack(sol.x)
    return P1, P2


def _newton_starts(cfg, psi1, psi2, sc):
    starts = []
    if sc.label in ("S1", "S2"):
        lo, hi = _scalar_window(cfg, psi1, psi2, sc.label)
        wlo = np.sqrt(max(lo, 0.0))
        whi = np.sqrt(hi) if hi > 0 else wlo + 1.0
        for w in np.linspace(wlo, max(whi, wlo), 5)[1:-1].tolist() + [wlo, 0.0]:
            for sgn in (1.0, -1.0):
                try:
                    X, Y = xy_of_w(sgn * w * np.eye(cfg.n), cfg, psi1, psi2, sc)
                    starts.append((X, -Y))
                except SquareRootDomain:
                    pass
    scale = np.sqrt(max(1.0, np.linalg.norm(cfg.Q_r)))
    for c in (1.0, 3.0, 10.0):
        starts.append((c * scale * np.eye(cfg.n), -c * scale * np.eye(cfg.n)))
    return starts


def solve_equilibrium(cfg: GameConfig, psi1: float, psi2: float, mode: str = "corrected",
                      bounds: tuple[float, float] | None = None, theta: float = 0.5,
                      max_iter: int = 500, tol: float = 1e-10, kappa: float = 1.0,
                      form: str = "controller") -> EquilibriumSolution:
    """Solve the coupled equations by the most direct applicable method.

    Order: equal weights -> closed form; bounds given -> guarded fixed-point
    iteration; isotropic controls -> exact per-direction roots; otherwise
    damped iteration, multi-start Newton on the stacked residual, and the
    stacked orthogonal construction.  Strict mode runs the literal
    fixed-point map only.

    Raises
    ------
    InnerSolveFailed
        If no admissible (P1 > 0, P2 < 0) solution is found.
    """
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    sc = classify_scenario(cfg.R, cfg.Pi)

    def finish(sol):
        if form != "controller":
            sol.A_cl = closed_loop_matrix(sol.P1, sol.P2, cfg, form)
        return sol

    if sc.label == "S3":
        try:
            P1, P2 = scenario3_solution(cfg, psi1, psi2, kappa)
        except (InconsistentScenario3, NotPositiveDefinite) as exc:
            raise InnerSolveFailed(str(exc)) from None
        return finish(_make_solution(P1, P2, cfg, psi1, psi2, "scenario3", "S3", mode))

    if mode == "strict":
        if sc.label == "Unclassified":
            raise InnerSolveFailed("strict mode needs scenario S1 or S2")
        try:
            if bounds is not None:
                return finish(solve_coupled(cfg, psi1, psi2, bounds[0], bounds[1], "strict",
                                            theta, max_iter, tol))
            lo, hi = _scalar_window(cfg, psi1, psi2, sc.label)
            w0 = 0.0 if lo < 0 else 0.5 * (np.sqrt(lo) + np.sqrt(max(hi, lo)))
            W, it = _damped_iteration(w0 * np.eye(cfg.n), cfg, psi1, psi2, sc, "strict",
                                      theta, max_iter, tol)
            X, Y = xy_of_w(W, cfg, psi1, psi2, sc, "strict")
        except (SquareRootDomain, NoConvergence, GuardViolated) as exc:
            raise InnerSolveFailed(f"strict fixed-point map: {exc}") from None
        return finish(_make_solution(X, -Y, cfg, psi1, psi2, "brouwer-strict", sc.label,
                                     "strict", it))

    if bounds is not None:
        try:
            return finish(solve_coupled(cfg, psi1, psi2, bounds[0], bounds[1], mode,
                                        theta, max_iter, tol))
        except (GuardViolated, NoConvergence, ResidualTooLarge, SquareRootDomain) as exc:
            raise InnerSolveFailed(str(exc)) from None

    if sc.label in ("S1", "S2") and cfg.isotropic_controls:
        return finish(solve_isotropic(cfg, psi1, psi2))

    failures = []
    if sc.label in ("S1", "S2"):
        lo, hi = _scalar_window(cfg, psi1, psi2, sc.label)
        w0 = 0.0 if lo < 0 else 0.5 * (np.sqrt(lo) + np.sqrt(max(hi, lo)))
        try:
            W, it = _damped_iteration(w0 * np.eye(cfg.n), cfg, psi1, psi2, sc, mode,
                                      theta, max_iter, tol)
            X, Y = xy_of_w(W, cfg, psi1, psi2, sc, mode)
            if _admissible(X, -Y, cfg, psi1, psi2):
                return finish(_make_solution(X, -Y, cfg, psi1, psi2, "brouwer", sc.label, mode, it))
            failures.append("damped iteration: fixed point fails the residual check")
        except (SquareRootDomain, NoConvergence) as exc:
            failures.append(f"damped iteration: {exc}")

    found = []
    for P1_0, P2_0 in _newton_starts(cfg, psi1, psi2, sc):
        P1, P2 = _newton(cfg, psi1, psi2, P1_0, P2_0)
        if _admissible(P1, P2, cfg, psi1, psi2):
            found.append((min_eig(P1 + P2), P1, P2))
    if found:
        found.sort(key=lambda t: -t[0])
        _, P1, P2 = found[0]
        return finish(_make_solution(P1, P2, cfg, psi1, psi2, "newton", sc.label, mode))
    failures.append("newton: no admissible root from any start")

    for name, fn in (("stacked", solve_stacked), ("stacked-mirror", solve_stacked_mirror)):
        try:
            P1, P2 = fn(cfg, psi1, psi2)
            return finish(_make_solution(P1, P2, cfg, psi1, psi2, name, sc.label, mode))
        except (PairingInfeasible, ResidualTooLarge) as exc:
            failures.append(f"{name}: {exc}")
    raise InnerSolveFailed("; ".join(failures))
