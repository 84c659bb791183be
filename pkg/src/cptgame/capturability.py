"""Sufficient capture conditions and the search for admissible bound pairs.

For a bound pair 0 <= d <= D the fixed-point map is sandwiched between four
boundary matrices.  Condition ids per scenario:

    S1.x_defined  4A1 - D^2 p > 0        S2.x_defined  d^2 p - 4A1 > 0
    S1.y_defined  d^2 r + 4A2 > 0        S2.y_defined  -4A2 - D^2 r > 0
    S1.lower      Xmin - Ymax >= d I     S2.lower      Xmin - Ymax >= d I
    S1.upper      Xmax - Ymin <= D I     S2.upper      Xmax - Ymin <= D I
    S3.difference, S3.sum                balance of Q_r against the Psi terms
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibrium import GameConfig, Scenario, _root, classify_scenario, scenario3_balance
from .errors import DomainError, SquareRootDomain
from .numerics import max_eig, min_eig, pd_tolerance, sym_inv, sym_inv_sqrt, symmetrize

GRID = 64
SLACK = 1e-10


@dataclass
class RationalCaptureResult:
    ok: bool
    margin: float

    def __bool__(self):
        return self.ok


@dataclass
class ConditionResult:
    cid: str
    passed: bool
    margin: float
    note: str = ""


@dataclass
class ConditionReport:
    scenario: str
    bounds: tuple[float, float] | None
    conditions: list[ConditionResult]
    overall: bool
    mode: str = "corrected"
    boundary_matrices: tuple | None = None
    notes: list = field(default_factory=list)

    def condition(self, cid: str) -> ConditionResult:
        for c in self.conditions:
            if c.cid == cid:
                return c
        raise KeyError(cid)


def check_rational_capture(R, Pi) -> RationalCaptureResult:
    """Rational capture test: R^{-1} - Pi^{-1} positive definite."""
    m = min_eig(sym_inv(R) - sym_inv(Pi))
    return RationalCaptureResult(m > 0.0, m)


def _operands(cfg, psi1, psi2, d, D, label):
    """(Xmin, Xmax, Ymin, Ymax) operands before the square roots."""
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    r, p = cfg.Rinv, cfg.Piinv
    if label == "S1":
        return (4 * A1 - D * D * p, 4 * A1 - d * d * p,
                d * d * r + 4 * A2, D * D * r + 4 * A2)
    if label == "S2":
        return (d * d * p - 4 * A1, D * D * p - 4 * A1,
                -4 * A2 - D * D * r, -4 * A2 - d * d * r)
    raise DomainError(f"boundary matrices need scenario S1 or S2, got {label}")


_IDS = {s: (f"{s}.x_defined", f"{s}.y_defined", f"{s}.lower", f"{s}.upper") for s in ("S1", "S2")}


def boundary_matrices(cfg: GameConfig, psi1: float, psi2: float, bounds, scenario: Scenario,
                      mode: str = "corrected"):
    """Xmin, Xmax, Ymin, Ymax for the bound pair.

    Raises
    ------
    SquareRootDomain
        If an operand is not positive definite; carries the id of the
        well-definedness condition it belongs to.
    """
    d, D = bounds
    ops = _operands(cfg, psi1, psi2, d, D, scenario.label)
    ids = _IDS[scenario.label]
    # S1: Xmin/Xmax operands belong to 30, Ymin/Ymax to 31; S2: X to 34, Y to 35.
    owner = (ids[0], ids[0], ids[1], ids[1])
    out = []
    for C, cid in zip(ops, owner):
        m = min_eig(C)
        if m <= pd_tolerance(C):
            raise SquareRootDomain(f"operand of condition {cid} not positive definite (min eig {m:.3e})",
                                   condition=cid, margin=m)
        out.append(_root(C, scenario.delta, mode))
    return tuple(out)


def _s12_report(cfg, psi1, psi2, bounds, sc, mode):
    d, D = bounds
    ids = _IDS[sc.label]
    ops = _operands(cfg, psi1, psi2, d, D, sc.label)
    # Well-definedness conditions: S1 uses the Xmin and Ymin operands, S2 the
    # Xmin and Ymin operands as well (d^2 p - 4A1 and -4A2 - D^2 r).
    wd = (ops[0], ops[2])
    conds = []
    for C, cid in zip(wd, ids[:2]):
        m = min_eig(C)
        conds.append(ConditionResult(cid, bool(m > pd_tolerance(C)), m))
    mats = None
    if all(c.passed for c in conds):
        try:
            mats = boundary_matrices(cfg, psi1, psi2, bounds, sc, mode)
        except SquareRootDomain as exc:
            conds.append(ConditionResult(exc.condition, False, exc.margin, "operand not definite"))
    if mats is None:
        for cid in ids[2:]:
            conds.append(ConditionResult(cid, False, float("nan"), "boundary matrices undefined"))
    else:
        Xmin, Xmax, Ymin, Ymax = mats
        slack = SLACK * max(1.0, np.linalg.norm(Xmax), np.linalg.norm(Ymax))
        lower = min_eig(Xmin - Ymax) - d
        upper = D - max_eig(Xmax - Ymin)
        conds.append(ConditionResult(ids[2], bool(lower >= -slack), lower))
        conds.append(ConditionResult(ids[3], bool(upper >= -slack), upper))
    return ConditionReport(sc.label, (d, D), conds, all(c.passed for c in conds), mode, mats)


def check_capture_conditions(cfg: GameConfig, psi1: float, psi2: float, bounds=None,
                   mode: str = "corrected") -> ConditionReport:
    """Evaluate the scenario-matched sufficient conditions with eigenvalue margins.

    For R = Pi both balance forms are reported: the difference form
    2 Q_r + (Psi1 - Psi2) q I and the sum 2 Q_r + (Psi1 + Psi2) q I implied by
    adding the two reduced equations.  Corrected mode decides on the sum form,
    strict mode on the difference form.
    """
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.label == "S3":
        bal = scenario3_balance(cfg, psi1, psi2)
        tol = 1e-10 * cfg.res_scale
        difference = ConditionResult("S3.difference", bal["difference_form"] <= tol,
                                     -bal["difference_form"], "2Qr + (Psi1 - Psi2) q I = 0")
        derived = ConditionResult("S3.sum", bal["sum_form"] <= tol, -bal["sum_form"],
                                  "2Qr + (Psi1 + Psi2) q I = 0")
        deciding = derived if mode == "corrected" else difference
        return ConditionReport("S3", None, [difference, derived], deciding.passed, mode)
    if sc.label == "Unclassified":
        return ConditionReport("Unclassified", bounds, [], False, mode,
                               notes=["R^-1 - Pi^-1 is indefinite; no condition set applies"])
    if bounds is None:
        bounds = (0.0, 0.0)
    rep = _s12_report(cfg, psi1, psi2, bounds, sc, mode)
    other = "strict" if mode == "corrected" else "corrected"
    alt = _s12_report(cfg, psi1, psi2, bounds, sc, other)
    if alt.overall != rep.overall:
        rep.notes.append(f"{other} mode verdict differs: overall {alt.overall}")
    return rep


def _gen_eigs(C, B):
    Bi = sym_inv_sqrt(B)
    return np.linalg.eigvalsh(symmetrize(Bi @ C @ Bi))


def bound_limit(cfg, psi1, psi2, label) -> tuple[float, float]:
    """Range [v_lo, v_hi] of the bound values allowed by the definiteness conditions.

    S1: D^2 < lambda_min of 4A1 relative to p, and d^2 > lambda_max of -4A2
    relative to r.  S2: d^2 > lambda_max of 4A1 relative to p and D^2 <
    lambda_min of -4A2 relative to r.
    """
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    if label == "S1":
        hi = _gen_eigs(4 * A1, cfg.Piinv)[0]
        lo = _gen_eigs(-4 * A2, cfg.Rinv)[-1]
    else:
        lo = _gen_eigs(4 * A1, cfg.Piinv)[-1]
        hi = _gen_eigs(-4 * A2, cfg.Rinv)[0]
    return np.sqrt(max(lo, 0.0)), (np.sqrt(hi) if hi > 0 else -1.0)


def _profile(cfg, psi1, psi2, values, sc, mode):
    """Per-value pieces of the margins.

    Every margin depends on d or D alone, up to an additive d or D:
      S1: m30(D), m31(d), m32 = mu(D) - d,  m33 = D - nu(d)
      S2: m34(d), m35(D), m36 = mu(d) - d,  m37 = D - nu(D)
    where mu = lambda_min(Xmin - Ymax) and nu = lambda_max(Xmax - Ymin).
    """
    A1, A2 = cfg.A(psi1), cfg.A(psi2)
    r, p = cfg.Rinv, cfg.Piinv
    out = {}
    for v in values:
        if sc.label == "S1":
            cx, cy = 4 * A1 - v * v * p, v * v * r + 4 * A2
        else:
            cx, cy = v * v * p - 4 * A1, -4 * A2 - v * v * r
        mx, my = min_eig(cx), min_eig(cy)
        ok = mx > pd_tolerance(cx) and my > pd_tolerance(cy)
        diff = _root(cx, sc.delta, mode) - _root(cy, sc.delta, mode) if ok else None
        # For S1, cx(v) is Xmin when v = D and Xmax when v = d; cy(v) is Ymin
        # at v = d and Ymax at v = D.  The same X - Y difference therefore
        # serves mu (at D) and nu (at d).  For S2 the roles swap.
        mu = min_eig(diff) if ok else -np.inf
        nu = max_eig(diff) if ok else np.inf
        out[v] = (mx, my, mu, nu)
    return out


def _margin(prof_d, prof_D, d, D, label):
    if label == "S1":
        m_wd1 = prof_D[0]
        m_wd2 = prof_d[1]
        m_lo = prof_D[2] - d
        m_hi = D - prof_d[3]
    else:
        m_wd1 = prof_d[0]
        m_wd2 = prof_D[1]
        m_lo = prof_d[2] - d
        m_hi = D - prof_D[3]
    return (m_wd1, m_wd2, m_lo, m_hi)


def search_bounds(cfg: GameConfig, psi1: float, psi2: float, mode: str = "corrected",
                  grid: int = GRID, refinements: int = 2):
    """Find (d, D) satisfying the scenario conditions, maximizing the worst margin.

    A grid x grid lattice over [0, v_max]^2 (d <= D) is scanned, then the
    best cell is refined twice on a lattice of half the spacing.  Ties go to
    the lexicographically smallest pair.  Returns None if nothing is feasible.
    """
    sc = classify_scenario(cfg.R, cfg.Pi)
    if sc.label not in ("S1", "S2"):
        return None
    v_lo, v_hi = bound_limit(cfg, psi1, psi2, sc.label)
    if v_hi < 0.0:
        return None
    vmax = max(v_hi, v_lo)

    def scan(dvals, Dvals):
        vals = sorted(set(dvals) | set(Dvals))
        prof = _profile(cfg, psi1, psi2, vals, sc, mode)
        best = None
        for d in dvals:
            for D in Dvals:
                if D < d or d < 0.0:
                    continue
                m = _margin(prof[d], prof[D], d, D, sc.label)
                slack = SLACK * max(1.0, vmax)
                feasible = m[0] > 0 and m[1] > 0 and m[2] >= -slack and m[3] >= -slack
                if not feasible:
                    continue
                score = min(m)
                if best is None or score > best[0] + 1e-15:
                    best = (score, d, D)
        return best

    base = np.linspace(0.0, vmax, grid).tolist()
    best = scan(base, base)
    h = vmax / (grid - 1) if grid > 1 else vmax
    for _ in range(refinements):
        if best is None:
            break
        h *= 0.5
        _, d0, D0 = best
        dv = [max(0.0, d0 + k * h) for k in range(-4, 5)]
        Dv = [min(vmax, max(0.0, D0 + k * h)) for k in range(-4, 5)]
        cand = scan(sorted(set(dv)), sorted(set(Dv)))
        if cand is not None and cand[0] > best[0] + 1e-15:
            best = cand
    if best is None:
        return None
    return (float(best[1]), float(best[2]))
