"""Cumulative-prospect-theory utilities, probability weighting and the chi/Psi terms.

The prospect value of a normally distributed index reduces to two scalar
integrals per player,

    chi_plus  = int_{1/2}^{1} [Phi^{-1}(x)]^alpha  dw(x)
    chi_minus = int_{0}^{1/2} [-Phi^{-1}(x)]^beta dw(x)

with w(p) = exp(-(-log p)^gamma).  Both have endpoint singularities in the
probability variable, so they are evaluated after a change of variables with
adaptive composite Gauss-Legendre panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError
from .numerics import norm_quantile_log

H_FLOOR = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_S_MAX = 40.0


@dataclass(frozen=True)
class CptParams:
    """Irrationality parameters of one player.

    role is "pursuer" or "evader".  The rational player has all four
    parameters equal to one.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    epsilon: float = 1.0
    role: str = "pursuer"

    def __post_init__(self):
        problems = validate_params(self)
        if problems:
            raise DomainError("; ".join(problems))

    @property
    def sign(self) -> int:
        return -1 if self.role == "pursuer" else 1

    @property
    def is_rational(self) -> bool:
        return self.alpha == 1.0 and self.beta == 1.0 and self.gamma == 1.0 and self.epsilon == 1.0


def validate_params(p: CptParams) -> list[str]:
    out = []
    if p.role not in ("pursuer", "evader"):
        out.append(f"role must be pursuer or evader, got {p.role!r}")
    if not (0.0 < p.gamma <= 1.0):
        out.append(f"gamma must lie in (0, 1], got {p.gamma}")
    if not p.epsilon >= 1.0:
        out.append(f"epsilon must be >= 1, got {p.epsilon}")
    hi = 1.0 if p.role == "pursuer" else math.inf
    for name in ("alpha", "beta"):
        v = getattr(p, name)
        if not (0.0 < v <= hi):
            bound = "(0, 1]" if p.role == "pursuer" else "(0, inf)"
            out.append(f"{p.role} {name} must lie in {bound}, got {v}")
    return out


@dataclass(frozen=True)
class ChiPair:
    chi_plus: float
    chi_minus: float
    err_plus: float = 0.0
    err_minus: float = 0.0


def utility(J: float, J_ref: float, params: CptParams) -> tuple[str, float]:
    """Branch tag ("gain" or "loss") and utility magnitude of outcome J.

    The pursuer gains when J falls below the reference, the evader when it
    rises above.  J == J_ref is tagged as a gain of magnitude zero.
    """
    dev = J - J_ref
    if params.role == "pursuer":
        if dev <= 0.0:
            return "gain", (-dev) ** params.alpha
        return "loss", params.epsilon * dev ** params.beta
    if dev >= 0.0:
        return "gain", dev ** params.alpha
    return "loss", params.epsilon * (-dev) ** params.beta


def _check_gamma(gamma):
    if not (0.0 < gamma <= 1.0):
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")


def weight(p, gamma: float):
    """Probability weighting w(p) = exp(-(-log p)^gamma) for p in (0, 1]."""
    _check_gamma(gamma)
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise DomainError("weight requires p in (0, 1]")
    if gamma == 1.0:
        return arr if arr.ndim else float(arr)
    out = np.exp(-((-np.log(arr)) ** gamma))
    return out if out.ndim else float(out)


def weight_derivative(p, gamma: float):
    """w'(p) = w(p) * gamma * (-log p)^(gamma-1) / p on the open unit interval."""
    _check_gamma(gamma)
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError("weight_derivative requires p in (0, 1)")
    if gamma == 1.0:
        out = np.ones_like(arr)
    else:
        L = -np.log(arr)
        out = np.exp(-(L ** gamma)) * gamma * L ** (gamma - 1.0) / arr
    return out if out.ndim else float(out)


def _gl(f, a, b):
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _GL_NODES
    return half * float(np.dot(_GL_WEIGHTS, f(x)))


def adaptive_gauss_legendre(f: Callable, breaks, tol: float = 1e-10, max_depth: int = 40):
    """Integrate a vectorized f over consecutive panels given by ``breaks``.

    Each panel is bisected until the one-panel and two-half-panel 15-point
    rules agree to the panel's share of ``tol``.

    Returns
    -------
    value, error_estimate
    """
    total = 0.0
    err = 0.0
    breaks = list(breaks)
    per_panel = tol / max(1, len(breaks) - 1)
    for a, b in zip(breaks[:-1], breaks[1:]):
        stack = [(a, b, _gl(f, a, b), per_panel, 0)]
        while stack:
            lo, hi, whole, ptol, depth = stack.pop()
            mid = 0.5 * (lo + hi)
            left = _gl(f, lo, mid)
            right = _gl(f, mid, hi)
            diff = abs(left + right - whole)
            if diff <= ptol or (hi - lo) <= 1e-15 * max(1.0, abs(hi)):
                total += left + right
                err += diff
            elif depth >= max_depth:
                raise QuadratureError(
                    f"no convergence on [{lo:.6g}, {hi:.6g}] (difference {diff:.3e})")
            else:
                stack.append((lo, mid, left, 0.5 * ptol, depth + 1))
                stack.append((mid, hi, right, 0.5 * ptol, depth + 1))
    return total, err


def _gain_integrand(exponent, gamma):
    # Gain branch in z = Phi^{-1}(x): z^a * w'(Phi(z)) * phi(z).
    def f(z):
        z = np.asarray(z, dtype=float)
        logphi = -0.5 * z * z - _LOG_SQRT_2PI
        za = np.power(z, exponent)
        if gamma == 1.0:
            return za * np.exp(logphi)
        L = -np.log1p(-special.ndtr(-z))
        logdens = (-(L ** gamma) + math.log(gamma) + (gamma - 1.0) * np.log(L)
                   + logphi - special.log_ndtr(z))
        return za * np.exp(logdens)
    return f


def _loss_integrand(exponent, gamma):
    # Loss branch in s = (-log x)^gamma: [-Phi^{-1}(exp(-s^{1/gamma}))]^b * e^{-s}.
    def f(s):
        s = np.asarray(s, dtype=float)
        z = -norm_quantile_log(-(s ** (1.0 / gamma)))
        return np.power(np.maximum(z, 0.0), exponent) * np.exp(-s)
    return f


def _gain_integral(exponent, gamma, tol):
    zmax = math.sqrt(2.0 * _S_MAX / gamma)
    breaks = [0.0, 1e-6, 1e-3, 0.05, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0]
    breaks = [b for b in breaks if b < zmax] + [zmax]
    return adaptive_gauss_legendre(_gain_integrand(exponent, gamma), breaks, tol)


def _loss_integral(exponent, gamma, tol):
    s0 = math.log(2.0) ** gamma
    offsets = [0.0, 1e-6, 1e-3, 0.02, 0.1, 0.3, 1.0, 2.0, 4.0, 8.0, 16.0]
    breaks = [s0 + o for o in offsets if s0 + o < _S_MAX] + [_S_MAX]
    return adaptive_gauss_legendre(_loss_integrand(exponent, gamma), breaks, tol)


@lru_cache(maxsize=4096)
def _chi_cached(alpha: float, beta: float, gamma: float, tol: float) -> ChiPair:
    cp, ep = _gain_integral(alpha, gamma, tol)
    if gamma == 1.0:
        # Identity weighting makes both branches half-moments of |Z|; the
        # shared integrand keeps chi_plus(a) and chi_minus(a) bit-identical.
        cm, em = _gain_integral(beta, gamma, tol)
    else:
        cm, em = _loss_integral(beta, gamma, tol)
    return ChiPair(cp, cm, ep, em)


def chi(params: CptParams, tol: float = 1e-10) -> ChiPair:
    """Gain and loss integrals chi_plus, chi_minus for the given parameters."""
    return _chi_cached(float(params.alpha), float(params.beta), float(params.gamma), tol)


def psi(params: CptParams, H: float) -> float:
    """Aggregate irrationality term (-1)^i (a chi+ H^(a-1) - eps b chi- H^(b-1)).

    i = 1 for the pursuer, 2 for the evader.  H is the scalar quadratic cost
    proxy x0' M x0 (or the outer fixed-point candidate) and must be at least
    1e-8 because fractional exponents diverge as H -> 0.
    """
    if not (H >= H_FLOOR) or not math.isfinite(H):
        raise DomainError(f"psi needs H >= {H_FLOOR:g}, got {H}")
    c = chi(params)
    a, b, e = params.alpha, params.beta, params.epsilon
    gain = a * c.chi_plus * (H ** (a - 1.0) if a != 1.0 else 1.0)
    loss = e * b * c.chi_minus * (H ** (b - 1.0) if b != 1.0 else 1.0)
    return params.sign * (gain - loss) + 0.0  # no negative zero


def _log_weight_of_tail(t, gamma):
    """log w(Phi(-t)) for t >= 0, computed without underflow."""
    L = -special.log_ndtr(-np.asarray(t, dtype=float))
    return -(L ** gamma)


def _weighted_tail_integral(scale, power, gamma):
    # int_0^inf w(Phi(-(h/scale)^(1/power))) dh, cut where the weight < 1e-12.
    t_cut = -norm_quantile_log(-(math.log(1e12) ** (1.0 / gamma)))
    h_cut = scale * t_cut ** power

    def f(h):
        return math.exp(_log_weight_of_tail((h / scale) ** (1.0 / power), gamma))

    points = [h_cut * x for x in (1e-6, 1e-4, 1e-2, 0.05, 0.2, 0.5)]
    val, err = integrate.quad(f, 0.0, h_cut, points=points, limit=500,
                              epsabs=1e-14, epsrel=1e-11)
    if err > 1e-8 * max(abs(val), 1e-300):
        raise QuadratureError(f"direct prospect integral error estimate {err:.3e}")
    return val


def cpt_value_direct(J_mean: float, sigma: float, params: CptParams) -> float:
    """Prospect value of J ~ N(J_mean, sigma^2) against the reference J_mean.

    Integrates the weighted survival probabilities of the gain and loss
    utilities over the utility level h,

        C = int_0^inf w(P(U+ > h)) dh - int_0^inf w(P(U- > h)) dh,

    with no reduction to the chi integrals.
    """
    if not sigma > 0.0:
        raise DomainError("sigma must be positive")
    a, b, e, g = params.alpha, params.beta, params.epsilon, params.gamma
    # Both roles see symmetric deviations around the mean, so
    # P(U+ > h) = Phi(-h^(1/a)/sigma) and P(U- > h) = Phi(-(h/e)^(1/b)/sigma).
    gain = _weighted_tail_integral(sigma ** a, a, g)
    loss = _weighted_tail_integral(e * sigma ** b, b, g)
    return gain - loss


def cpt_closed_form(sigma: float, params: CptParams) -> float:
    """sigma^alpha chi+ - eps sigma^beta chi-."""
    c = chi(params)
    return sigma ** params.alpha * c.chi_plus - params.epsilon * sigma ** params.beta * c.chi_minus


def cpt_index(J_run: float, sigma: float, params: CptParams) -> float:
    """Player index: J_run - C for the pursuer, J_run + C for the evader."""
    if sigma < 0.0:
        raise DomainError("sigma must be nonnegative")
    if sigma == 0.0:
        return J_run
    C = cpt_closed_form(sigma, params)
    return J_run - C if params.role == "pursuer" else J_run + C
