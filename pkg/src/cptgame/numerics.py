"""Normal-distribution functions and symmetric-matrix primitives.

Everything here is a pure function of its arguments.  Matrix routines work for
any dimension; the game itself uses 3x3 blocks and 6x6 stacked forms.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy import special

from .errors import DomainError, NotHurwitz, NotPositiveDefinite

HURWITZ_TOL = 1e-10

# Wichura's AS241 (PPND16) rational approximations.
_A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
      13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
      33430.575583588128105, 2509.0809287301226727)
_B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
      21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
      5226.495278852545925)
_C = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
      3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
      0.0227238449892691845833, 7.7454501427834140764e-4)
_D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
      0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4,
      1.05075007164441684324e-9)
_E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
      0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
      7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
      2.04426310338993978564e-15)

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _poly(coef, x):
    out = np.zeros_like(x) + coef[-1]
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def _tail_quantile(r):
    """Lower-tail quantile from r = sqrt(-log p), returned as a negative number."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    near = r <= 5.0
    t = r[near] - 1.6
    out[near] = _poly(_C, t) / _poly(_D, t)
    mid = (r > 5.0) & (r <= 27.0)
    t = r[mid] - 5.0
    out[mid] = _poly(_E, t) / _poly(_F, t)
    # Beyond the design range of AS241: leading asymptotic term, refined later.
    far = r > 27.0
    L = r[far] ** 2
    out[far] = np.sqrt(2.0 * L - np.log(4.0 * np.pi * L))
    return -out


def norm_cdf(z):
    """Standard normal CDF (saturates to 0 or 1 in the far tails)."""
    return special.ndtr(z)


def norm_quantile(p):
    """Inverse of the standard normal CDF, accurate to about 1e-15 relative.

    Parameters
    ----------
    p : float or array_like
        Probabilities strictly inside (0, 1).

    Raises
    ------
    DomainError
        If any p lies outside the open unit interval.
    """
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(~(p > 0.0)) or np.any(~(p < 1.0)):
        raise DomainError("norm_quantile requires p in (0, 1)")
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    r = 0.180625 - q[central] ** 2
    out[central] = q[central] * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    lower = np.minimum(p[tail], 1.0 - p[tail])
    z = _tail_quantile(np.sqrt(-np.log(lower)))
    out[tail] = np.where(q[tail] < 0.0, z, -z)
    return float(out[0]) if scalar else out


def norm_quantile_log(logp):
    """Normal quantile of p = exp(logp), usable far below the float64 range.

    AS241's tail branch is evaluated at r = sqrt(-logp) and polished with
    Newton steps on log Phi, keeping near full accuracy for -logp up to 1e300.
    """
    scalar = np.ndim(logp) == 0
    lp = np.atleast_1d(np.asarray(logp, dtype=float))
    if np.any(lp > 0.0) or np.any(~np.isfinite(lp)) or np.any(lp == 0.0):
        raise DomainError("norm_quantile_log requires log p in (-inf, 0)")
    out = np.empty_like(lp)
    mid = lp > np.log(0.075)
    if np.any(mid):
        # Above p = 0.075 the ordinary path is exact enough; the upper half
        # goes through 1 - p = -expm1(logp) to avoid cancellation.
        upper = lp[mid] > np.log(0.5)
        pm = np.exp(lp[mid])
        vals = np.empty_like(pm)
        vals[~upper] = norm_quantile(pm[~upper])
        if np.any(upper):
            vals[upper] = -norm_quantile(-np.expm1(lp[mid][upper]))
        out[mid] = vals
    low = ~mid
    if np.any(low):
        z = _tail_quantile(np.sqrt(-lp[low]))
        # Newton on log Phi; beyond 1e8 the asymptotic start is already exact
        # to rounding and the update itself would lose all precision.
        far = (lp[low] < -25.0) & (lp[low] > -1e8)
        for _ in range(3):
            zf = z[far]
            lc = special.log_ndtr(zf)
            ratio = np.exp(lc + 0.5 * zf * zf + _LOG_SQRT_2PI)
            z[far] = zf - (lc - lp[low][far]) * ratio
        out[low] = z
    return float(out[0]) if scalar else out


def symmetrize(A):
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def pd_tolerance(A) -> float:
    """Positive-definiteness threshold 1e-12 * max(1, ||A||_2)."""
    return 1e-12 * max(1.0, float(np.linalg.norm(A, 2)))


def min_eig(A) -> float:
    return float(np.linalg.eigvalsh(symmetrize(A))[0])


def max_eig(A) -> float:
    return float(np.linalg.eigvalsh(symmetrize(A))[-1])


def is_pd(A) -> bool:
    return min_eig(A) > pd_tolerance(A)


def _spectral_power(A, power, allow_semidefinite=False):
    A = symmetrize(A)
    lam, V = np.linalg.eigh(A)
    tol = pd_tolerance(A)
    if allow_semidefinite:
        if lam[0] < -tol:
            raise NotPositiveDefinite(f"matrix not positive semidefinite (min eig {lam[0]:.3e})")
        lam = np.clip(lam, 0.0, None)
    elif lam[0] <= tol:
        raise NotPositiveDefinite(f"matrix not positive definite (min eig {lam[0]:.3e})")
    return symmetrize((V * lam ** power) @ V.T)


def sym_sqrt(A):
    """Principal square root of a symmetric positive definite matrix."""
    return _spectral_power(A, 0.5)


def sym_inv_sqrt(A):
    return _spectral_power(A, -0.5)


def psd_sqrt(A):
    """Square root of a positive semidefinite matrix (tiny negative eigenvalues clipped)."""
    return _spectral_power(A, 0.5, allow_semidefinite=True)


def sym_inv(A):
    return _spectral_power(A, -1.0)


def congruence_sqrt(C, Delta):
    """Solve X Delta X = C for symmetric positive semidefinite X.

    Uses X = Delta^{-1/2} (Delta^{1/2} C Delta^{1/2})^{1/2} Delta^{-1/2}.
    """
    Dh = sym_sqrt(Delta)
    Dih = sym_inv_sqrt(Delta)
    return symmetrize(Dih @ psd_sqrt(Dh @ symmetrize(C) @ Dh) @ Dih)


def naive_congruence_sqrt(C, Delta):
    """Delta^{-1/2} C^{1/2} Delta^{-1/2}.

    This placement does not solve X Delta X = C unless Delta is a multiple of
    the identity equal to one; it is kept to reproduce literal formulas.
    """
    Dih = sym_inv_sqrt(Delta)
    return symmetrize(Dih @ psd_sqrt(C) @ Dih)


def solve_lyapunov(A, Q, tol: float = HURWITZ_TOL):
    """Solve A^T M + M A + Q = 0 for a Hurwitz A.

    Raises
    ------
    NotHurwitz
        If an eigenvalue of A has real part >= -tol.
    """
    A = np.asarray(A, dtype=float)
    spectrum = np.linalg.eigvals(A)
    if np.max(spectrum.real) >= -tol:
        raise NotHurwitz("Lyapunov solve needs a Hurwitz matrix", spectrum)
    M = scipy.linalg.solve_continuous_lyapunov(A.T, -np.asarray(Q, dtype=float))
    return symmetrize(M)


def loewner_geq(A, B, slack: float = 0.0) -> bool:
    """True iff A - B is positive semidefinite up to ``slack``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DomainError(f"dimension mismatch {A.shape} vs {B.shape}")
    return min_eig(A - B) >= -slack


def is_hurwitz(A, tol: float = HURWITZ_TOL) -> bool:
    return bool(np.max(np.linalg.eigvals(np.asarray(A, dtype=float)).real) < -tol)


def is_scalar_identity(A, rtol: float = 1e-12) -> bool:
    """True when A equals c*I up to a relative tolerance."""
    A = np.asarray(A, dtype=float)
    c = np.trace(A) / A.shape[0]
    return bool(np.linalg.norm(A - c * np.eye(A.shape[0])) <= rtol * max(1.0, abs(c)))
