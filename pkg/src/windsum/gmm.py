"""Sums of Gaussian bumps ``sum_i a_i exp(-(x - b_i)^2 / c_i)`` fitted by least squares."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class GmmOptions:
    max_iter: int = 1000
    ftol: float = 1e-10      # relative cost reduction of an accepted step
    rtol: float = 1e-10      # RMS residual relative to peak |y| counted as exact
    window: int = 25         # stagnation: accepted steps compared ...
    stall: float = 0.05      # ... must cut the cost by more than this fraction
    damping: float = 1e-3    # initial Marquardt parameter
    damping_up: float = 4.0
    damping_down: float = 3.0


@dataclass(frozen=True)
class GmmApprox:
    amplitudes: np.ndarray
    centers: np.ndarray
    widths: np.ndarray
    rms_residual: float = float("nan")
    max_residual: float = float("nan")
    negative_dip: float = 0.0
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = x[..., None] - self.centers
        return np.sum(self.amplitudes * np.exp(-d * d / self.widths), axis=-1)

    @property
    def n_components(self):
        return self.amplitudes.size

    def to_dict(self):
        return {
            "components": [
                {"a": float(a), "b": float(b), "c": float(c)}
                for a, b, c in zip(self.amplitudes, self.centers, self.widths)
            ],
            "rms_residual": self.rms_residual,
            "max_residual": self.max_residual,
            "negative_dip": self.negative_dip,
            "iterations": self.iterations,
            "stop_reason": self.diagnostics.get("stop_reason", ""),
            "converged": self.diagnostics.get("converged", True),
        }


def _unpack(theta, n):
    return theta[:n], theta[n:2 * n], np.exp(np.clip(theta[2 * n:], -60.0, 60.0))


def _basis(x, b, c):
    d = x[:, None] - b[None, :]
    return np.exp(-d * d / c[None, :]), d


def initial_guess(x, y, n):
    """Equally spaced centres, widths ``(span/n)^2``, amplitudes by linear least squares."""
    lo, hi = float(x[0]), float(x[-1])
    span = hi - lo
    centers = lo + (np.arange(n) + 0.5) * span / n
    widths = np.full(n, (span / n) ** 2)
    g, _ = _basis(x, centers, widths)
    amps, *_ = np.linalg.lstsq(g, y, rcond=None)
    return amps, centers, widths


def _approx(theta, n, x, y, iterations, reason=""):
    a, b, c = _unpack(theta, n)
    g = GmmApprox(a, b, c)
    fit = g(x)
    res = fit - y
    peak = max(float(np.max(np.abs(fit))), float(np.max(np.abs(y))), np.finfo(float).tiny)
    dense = np.linspace(x[0], x[-1], 4 * x.size)
    dip = float(min(0.0, np.min(g(dense))))
    return GmmApprox(a, b, c,
                     rms_residual=float(np.sqrt(np.mean(res ** 2))),
                     max_residual=float(np.max(np.abs(res))),
                     negative_dip=dip if dip < -1e-6 * peak else 0.0,
                     iterations=iterations,
                     diagnostics={"stop_reason": reason, "peak": peak})


def fit_gmm(x, y, n, options=None):
    """Fit ``n`` Gaussian bumps to samples ``(x, y)``.

    Damped Gauss-Newton (Levenberg-Marquardt) on ``(a_i, b_i, log c_i)`` with
    an analytic Jacobian, started from :func:`initial_guess`.  Stops when the
    RMS residual is negligible, when an accepted step barely lowers the cost,
    when the cost stagnates over a window of steps, or when no damping yields
    descent.  Deterministic for fixed inputs.

    Raises
    ------
    DomainError
        ``n < 1``, fewer than ``3n`` points, or ``x`` not strictly increasing.
    ConvergenceError
        The iteration cap was hit; ``best`` holds the last iterate.
    """
    opts = options or GmmOptions()
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if n < 1:
        raise DomainError("need at least one Gaussian component")
    if x.size != y.size:
        raise DomainError("x and y differ in length")
    if x.size < 3 * n:
        raise DomainError(f"need at least {3 * n} points for {n} components, got {x.size}")
    if np.any(np.diff(x) <= 0):
        raise DomainError("x must be strictly increasing")

    # fit in scaled units so the stopping rules are scale free
    yscale = float(np.max(np.abs(y))) or 1.0
    ys = y / yscale
    a0, b0, c0 = initial_guess(x, ys, n)
    theta = np.concatenate([a0, b0, np.log(c0)])

    def residual(theta):
        a, b, c = _unpack(theta, n)
        g, _ = _basis(x, b, c)
        return g @ a - ys

    def jac(theta):
        a, b, c = _unpack(theta, n)
        g, d = _basis(x, b, c)
        return np.hstack([g, g * a * 2.0 * d / c, g * a * d * d / c])

    r = residual(theta)
    cost = float(r @ r)
    lam = opts.damping
    converged = False
    reason = "max_iter"
    history = [cost]
    it = 0
    for it in range(1, opts.max_iter + 1):
        if np.sqrt(cost / x.size) <= opts.rtol:
            converged, reason = True, "rtol"
            break
        J = jac(theta)
        JtJ = J.T @ J
        g = J.T @ r
        scale = np.maximum(np.diag(JtJ), 1e-30)
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(JtJ + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                lam *= opts.damping_up
                continue
            trial = theta + step
            r_new = residual(trial)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                improved = True
                break
            lam *= opts.damping_up
        if not improved:
            # no descent direction left at any damping: a stationary point
            converged, reason = True, "stationary"
            break
        drop = (cost - cost_new) / cost
        theta, r, cost = trial, r_new, cost_new
        lam = max(lam / opts.damping_down, 1e-12)
        history.append(cost)
        if drop <= opts.ftol:
            converged, reason = True, "ftol"
            break
        if len(history) > opts.window and history[-1 - opts.window] <= (1.0 + opts.stall) * cost:
            converged, reason = True, "stalled"
            break

    theta = theta.copy()
    theta[:n] *= yscale
    approx = _approx(theta, n, x, y, it, reason)
    if not converged:
        raise ConvergenceError(f"GMM fit did not converge in {opts.max_iter} iterations", best=approx)
    return approx
