"""Vectorised adaptive Gauss-Kronrod (7/15) quadrature.

Many independent integrals are advanced together: every round evaluates the
integrand on all still-open panels in one call, accepts panels whose error
estimate is inside their share of the tolerance and bisects the rest.
"""

from __future__ import annotations

import numpy as np

from .errors import AccuracyError

# 15-point Kronrod abscissae (non-negative half) and weights, QUADPACK qk15.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# 7-point Gauss weights attached to the odd Kronrod nodes (indices 1, 3, 5, 7).
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


def gk15(f, a, b, owner):
    """One Gauss-Kronrod 15 step on panels ``[a_i, b_i]``.

    ``f(t, owner)`` receives a ``(m, 15)`` array of abscissae and the panel
    owners broadcast to the same shape.  Returns ``(kronrod, error)`` arrays
    using QUADPACK's error heuristic.
    """
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = centre[:, None] + half[:, None] * _NODES[None, :]
    own = np.broadcast_to(owner[:, None], t.shape)
    fv = np.asarray(f(t, own), dtype=float)
    kron = fv @ _KWEIGHTS
    gauss = fv @ _GWEIGHTS
    mean = 0.5 * kron
    resabs = np.abs(fv) @ _KWEIGHTS * np.abs(half)
    resasc = np.abs(fv - mean[:, None]) @ _KWEIGHTS * np.abs(half)
    kron = kron * half
    err = np.abs((kron - gauss * half))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, err), err)
    return kron, err


def integrate_panels(f, a, b, owner=None, n_integrals=None, tol=1e-9, limit=60):
    """Integrate ``f`` over panels, summing panels that share an owner.

    Parameters
    ----------
    f : callable
        Vectorised integrand ``f(t, owner)``.
    a, b : array_like
        Panel endpoints.  Several panels may belong to one integral.
    owner : array_like of int, optional
        Integral index for each panel; defaults to one integral per panel.
    tol : float
        Absolute tolerance per integral, shared among its panels in
        proportion to panel length.
    limit : int
        Maximum number of panels any one integral may be split into.

    Returns
    -------
    values, errors : ndarray
        One entry per integral.

    Raises
    ------
    AccuracyError
        If some integral still misses ``tol`` after ``limit`` panels.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float)).ravel()
    b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
    if owner is None:
        owner = np.arange(a.size)
    owner = np.atleast_1d(np.asarray(owner, dtype=np.intp)).ravel()
    if n_integrals is None:
        n_integrals = int(owner.max()) + 1 if owner.size else 0
    values = np.zeros(n_integrals)
    errors = np.zeros(n_integrals)
    if a.size == 0:
        return values, errors

    length = np.abs(b - a)
    total = np.bincount(owner, weights=length, minlength=n_integrals)
    panels = np.bincount(owner, minlength=n_integrals)
    share = np.where(total[owner] > 0, length / np.where(total[owner] > 0, total[owner], 1.0), 1.0)
    budget = tol * share
    failed = np.zeros(n_integrals, dtype=bool)

    keep = length > 0
    a, b, owner, budget = a[keep], b[keep], owner[keep], budget[keep]
    while a.size:
        kron, err = gk15(f, a, b, owner)
        done = err <= budget
        # panels too short to split further are accepted as-is
        width = np.abs(b - a)
        done |= width <= 64.0 * _EPS * np.maximum(np.abs(a), np.abs(b))
        exhausted = ~done & (panels[owner] >= limit)
        final = done | exhausted
        np.add.at(values, owner[final], kron[final])
        np.add.at(errors, owner[final], err[final])
        failed[owner[exhausted]] = True

        split = ~final
        if not split.any():
            break
        a, b, owner, budget = a[split], b[split], owner[split], budget[split]
        np.add.at(panels, owner, 1)
        mid = 0.5 * (a + b)
        a = np.concatenate([a, mid])
        b = np.concatenate([mid, b])
        owner = np.concatenate([owner, owner])
        budget = np.concatenate([0.5 * budget, 0.5 * budget])

    if failed.any():
        worst = int(np.argmax(np.where(failed, errors, -np.inf)))
        raise AccuracyError(
            f"quadrature tolerance {tol:g} not reached within {limit} panels "
            f"for {int(failed.sum())} integral(s); worst error {errors[worst]:.3g}",
            estimate=values,
            error=errors,
        )
    return values, errors


def integrate(f, a, b, tol=1e-9, limit=60):
    """Scalar convenience wrapper: ``f`` takes a 1-D array of abscissae."""
    vals, errs = integrate_panels(lambda t, _own: f(t), [a], [b], tol=tol, limit=limit)
    return float(vals[0]), float(errs[0])
