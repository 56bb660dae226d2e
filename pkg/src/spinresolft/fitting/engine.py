"""
Damped Gauss-Newton (Levenberg-Marquardt) least squares.

Damping is scaled by the running column norms of the Jacobian (Marquardt
scaling) and adapted with Nielsen's gain-ratio rule. Each step solves the
augmented linear problem ``[J; sqrt(lam) D] dp = [-r; 0]`` by least squares
instead of forming the normal equations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import yaml

log = logging.getLogger(__name__)

COND_LIMIT = 1e14
_EPS = np.finfo(float).eps


class FitError(RuntimeError):
    """Base class for fitting failures."""


class ConvergenceError(FitError):
    def __init__(self, msg, iterations=None, chi2=None, damping=None):
        super().__init__(msg)
        self.iterations = iterations
        self.chi2 = chi2
        self.damping = damping


class DegenerateFitError(FitError):
    pass


@dataclass
class FitResult:
    names: tuple
    values: np.ndarray
    errors: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    iterations: int
    damping: float
    residuals: np.ndarray = field(repr=False, default=None)
    extras: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def error(self, name):
        return float(self.errors[self.names.index(name)])

    @property
    def reduced_chi2(self):
        return self.chi2 / self.dof if self.dof > 0 else float("nan")

    def as_dict(self) -> dict:
        out = {
            "parameters": {n: {"value": float(v), "error": float(e)}
                           for n, v, e in zip(self.names, self.values, self.errors)},
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "iterations": int(self.iterations),
            "damping": float(self.damping),
        }
        if self.extras:
            out["derived"] = {k: float(v) if np.isscalar(v) else v for k, v in self.extras.items()}
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.as_dict(), sort_keys=False)


def numeric_jacobian(func, p, scale, lower, upper):
    """Central-difference Jacobian; steps stay inside the bounds."""
    h = np.cbrt(_EPS) * np.maximum(np.abs(p), scale)
    cols = []
    for i in range(p.size):
        hi = min(h[i], upper[i] - p[i]) if np.isfinite(upper[i]) else h[i]
        lo = min(h[i], p[i] - lower[i]) if np.isfinite(lower[i]) else h[i]
        if hi <= 0 and lo <= 0:
            hi = lo = h[i]
        hi, lo = max(hi, 0.0), max(lo, 0.0)
        pp = p.copy()
        pm = p.copy()
        pp[i] += hi
        pm[i] -= lo
        cols.append((func(pp) - func(pm)) / (hi + lo))
    return np.column_stack(cols)


def fit(func, x, y, p0, sigma=None, bounds=None, names=None, jac=None, max_iter=200,
        ftol=1e-12, xtol=1e-10, scale_covariance=True, x_scale=None) -> FitResult:
    """Minimise ``sum(((y - func(x, *p)) / sigma)^2)``.

    Parameters
    ----------
    func : callable
        ``func(x, *params) -> array`` shaped like ``y``.
    p0 : sequence of float
        Starting point.
    sigma : array_like, optional
        Standard deviations of ``y``; unit weights when omitted.
    bounds : (lower, upper), optional
        Box constraints enforced by clipping every trial step.
    jac : callable, optional
        Analytic Jacobian ``jac(x, *params) -> (n_data, n_params)``.
    scale_covariance : bool
        Multiply the covariance by ``chi2 / dof`` (the residual variance).
    x_scale : array_like, optional
        Typical parameter magnitudes used for finite-difference steps.

    Returns
    -------
    FitResult

    Raises
    ------
    ConvergenceError
        If ``max_iter`` iterations pass without meeting the tolerances.
    DegenerateFitError
        If the Jacobian at the solution is numerically rank deficient.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float).ravel()
    p = np.array(p0, dtype=float)
    n_par = p.size
    if names is None:
        names = tuple(f"p{i}" for i in range(n_par))
    names = tuple(names)
    if len(names) != n_par:
        raise ValueError("names must match the number of parameters")
    if y.size < n_par:
        raise FitError(f"need at least {n_par} data points, got {y.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(p))):
        raise FitError("data and initial guess must be finite")
    w = np.ones_like(y) if sigma is None else 1.0 / np.broadcast_to(np.asarray(sigma, float), y.shape)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise FitError("sigma must be positive and finite")
    lower = np.full(n_par, -np.inf)
    upper = np.full(n_par, np.inf)
    if bounds is not None:
        lower = np.broadcast_to(np.asarray(bounds[0], float), (n_par,)).copy()
        upper = np.broadcast_to(np.asarray(bounds[1], float), (n_par,)).copy()
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
    p = np.clip(p, lower, upper)
    scale = np.abs(p) if x_scale is None else np.abs(np.asarray(x_scale, float))
    scale = np.where(scale > 0, scale, 1.0)

    def resid(q):
        r = (np.asarray(func(x, *q), float).ravel() - y) * w
        if r.shape != y.shape:
            raise FitError("model output does not match the data shape")
        return r

    def jacobian(q):
        if jac is not None:
            return np.asarray(jac(x, *q), float) * w[:, None]
        return numeric_jacobian(resid, q, scale, lower, upper)

    r = resid(p)
    chi2 = float(r @ r)
    if not np.isfinite(chi2):
        raise FitError("model is not finite at the initial guess")
    data_scale = float(np.sum((y * w) ** 2)) or 1.0
    lam, nu = 1e-3, 2.0
    it = 0
    converged = chi2 <= (_EPS**2) * data_scale
    J = jacobian(p)
    D = np.sqrt(np.sum(J * J, axis=0))
    while not converged and it < max_iter:
        it += 1
        D = np.maximum(D, np.sqrt(np.sum(J * J, axis=0)))
        Dn = np.where(D > 0, D, 1.0)
        A = np.vstack([J, np.sqrt(lam) * np.diag(Dn)])
        b = np.concatenate([-r, np.zeros(n_par)])
        dp = np.linalg.lstsq(A, b, rcond=None)[0]
        p_new = np.clip(p + dp, lower, upper)
        dp = p_new - p
        r_new = resid(p_new)
        chi2_new = float(r_new @ r_new)
        pred = chi2 - float(np.sum((r + J @ dp) ** 2))
        rho = (chi2 - chi2_new) / pred if pred > 0 else -1.0
        if np.isfinite(chi2_new) and chi2_new < chi2 and rho > 0:
            small_step = np.all(np.abs(dp) <= xtol * (np.abs(p) + xtol * scale))
            small_gain = (chi2 - chi2_new) <= ftol * chi2
            p, r, chi2 = p_new, r_new, chi2_new
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            converged = small_step or small_gain or chi2 <= (_EPS**2) * data_scale
            J = jacobian(p)
        else:
            if np.all(np.abs(dp) <= xtol * (np.abs(p) + xtol * scale)):
                converged = True
                break
            lam *= nu
            nu *= 2.0
            if lam > 1e16:
                # no decrease possible along any direction: stationary point
                converged = True
    if not converged:
        raise ConvergenceError(f"no convergence after {max_iter} iterations (chi2={chi2:.6g})",
                               iterations=it, chi2=chi2, damping=lam)

    J = jacobian(p) if it == 0 else J
    cov = _covariance(J)
    dof = y.size - n_par
    if scale_covariance and dof > 0:
        cov = cov * (chi2 / dof)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    log.debug("fit converged in %d iterations, chi2=%g", it, chi2)
    return FitResult(names, p, errors, cov, chi2, dof, it, lam, residuals=r / w)


def _covariance(J):
    norms = np.sqrt(np.sum(J * J, axis=0))
    if np.any(norms == 0):
        raise DegenerateFitError("a parameter has no influence on the model")
    Js = J / norms
    s = np.linalg.svd(Js, compute_uv=False)
    if s[-1] == 0 or (s[0] / s[-1]) ** 2 > COND_LIMIT:
        raise DegenerateFitError("normal matrix is singular to working precision")
    inv = np.linalg.inv(Js.T @ Js)
    return inv / np.outer(norms, norms)
