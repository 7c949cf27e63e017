"""Mixed discrete-continuous distributions on a bounded interval.

A :class:`MixedDistribution` is a finite set of atoms plus a continuous part.
The continuous part is any object exposing ``pdf(x)``, ``cdf(x)`` (continuous
mass accumulated on ``[lo, x]``), ``mass`` and ``breakpoints`` (interior points
where the density may jump).  Closed-form parts live next to the models that
produce them; :class:`TabulatedContinuous` covers everything computed
numerically.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline, PchipInterpolator

from .errors import ConstructionError, DomainError
from .quadrature import integrate_panels

ATOM_FLOOR = 1e-14
NORMALIZATION_TOL = 1e-6


def chebyshev_knots(a, b, n):
    """``n`` open Chebyshev nodes on ``(a, b)``, clustered towards both ends."""
    theta = np.pi * (np.arange(n) + 0.5) / n
    return a + (b - a) * 0.5 * (1.0 - np.cos(theta))


def _monotone_slopes(x, y, d):
    """Fritsch-Carlson limiting of Hermite slopes ``d`` for nondecreasing data."""
    d = np.array(d, dtype=float)
    secant = np.diff(y) / np.diff(x)
    flat = secant <= 0
    d[:-1][flat] = 0.0
    d[1:][flat] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = d[:-1] / secant
        b = d[1:] / secant
        r = np.hypot(a, b)
        scale = np.where(~flat & (r > 3.0), 3.0 / r, 1.0)
    d[:-1] *= scale
    d[1:] *= scale
    return d


class TabulatedContinuous:
    """Piecewise continuous part known at knots on consecutive segments.

    Parameters
    ----------
    edges : array_like
        Segment boundaries ``e_0 < e_1 < ... < e_m``.  The density may jump at
        interior edges and is smooth inside each segment.
    knots : sequence of ndarray
        Interior abscissae for each segment.
    values : sequence of ndarray
        Density at the knots.
    pdf_fn : callable, optional
        Exact density evaluator used instead of interpolating ``values``.

    The cumulative mass at each knot comes from integrating a not-a-knot cubic
    spline through the density samples.  Between knots the CDF is a cubic
    Hermite interpolant whose slopes are the density values, limited so the
    result stays monotone.
    """

    def __init__(self, edges, knots, values, pdf_fn=None):
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ConstructionError("segment edges must be strictly increasing")
        if len(knots) != edges.size - 1 or len(values) != edges.size - 1:
            raise ConstructionError("need one knot/value array per segment")
        self.edges = edges
        self.lo = float(edges[0])
        self.hi = float(edges[-1])
        self.breakpoints = tuple(float(e) for e in edges[1:-1])
        self._pdf_fn = pdf_fn

        self._pdf_interp = []
        self._cdf_interp = []
        seg_mass = []
        offset = 0.0
        self._offsets = []
        for e0, e1, x, y in zip(edges[:-1], edges[1:], knots, values):
            x = np.asarray(x, dtype=float)
            y = np.clip(np.asarray(y, dtype=float), 0.0, None)
            xs = np.concatenate([[e0], x, [e1]])
            spline = CubicSpline(x, y, extrapolate=True)
            prim = spline.antiderivative()
            cum = prim(xs) - prim(e0)
            cum = np.maximum.accumulate(np.maximum(cum, 0.0))
            # end values extrapolated from the boundary knots
            ends = np.clip(spline([e0, e1]), 0.0, None)
            ys = np.concatenate([[ends[0]], y, [ends[1]]])
            self._pdf_interp.append(PchipInterpolator(xs, ys, extrapolate=True))
            self._cdf_interp.append(
                CubicHermiteSpline(xs, cum, _monotone_slopes(xs, cum, ys), extrapolate=True))
            self._offsets.append(offset)
            seg_mass.append(float(cum[-1]))
            offset += float(cum[-1])
        self.segment_mass = np.array(seg_mass)
        self._offsets = np.array(self._offsets)
        self.mass = float(offset)

    def _segment(self, x):
        idx = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(idx, 0, self.edges.size - 2)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self._pdf_fn is not None:
            return self._pdf_fn(x)
        return self.pdf_interpolated(x)

    def pdf_interpolated(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        inside = (x > self.lo) & (x < self.hi)
        seg = self._segment(x)
        for k, interp in enumerate(self._pdf_interp):
            sel = inside & (seg == k)
            if sel.any():
                out[sel] = interp(x[sel])
        return np.clip(out, 0.0, None)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= self.hi, self.mass, 0.0)
        inside = (x > self.lo) & (x < self.hi)
        seg = self._segment(x)
        for k, interp in enumerate(self._cdf_interp):
            sel = inside & (seg == k)
            if sel.any():
                out[sel] = self._offsets[k] + interp(x[sel])
        return np.clip(out, 0.0, self.mass)

    def with_interpolated_pdf(self):
        """Same table, density served from the knot interpolant."""
        twin = object.__new__(TabulatedContinuous)
        twin.__dict__.update(self.__dict__)
        twin._pdf_fn = None
        return twin


class MixedDistribution:
    """Atoms plus a continuous part on ``[lo, hi]``.

    ``kind`` records where the distribution came from: ``"marginal"``,
    ``"pair-sum"`` or ``"recursive"``.
    """

    def __init__(self, lo, hi, atom_locs, atom_masses, continuous=None, kind="marginal",
                 check=True):
        lo, hi = float(lo), float(hi)
        if not lo <= hi:
            raise ConstructionError(f"empty support [{lo}, {hi}]")
        locs = np.atleast_1d(np.asarray(atom_locs, dtype=float))
        masses = np.atleast_1d(np.asarray(atom_masses, dtype=float))
        if locs.shape != masses.shape:
            raise ConstructionError("atom locations and masses differ in length")
        order = np.argsort(locs, kind="stable")
        locs, masses = locs[order], masses[order]
        keep = masses >= ATOM_FLOOR
        locs, masses = locs[keep], masses[keep]
        if np.any(np.diff(locs) <= 0):
            raise ConstructionError("atom locations must be distinct")
        if np.any(masses > 1.0 + 1e-12) or np.any(masses < 0):
            raise ConstructionError("atom masses must lie in [0, 1]")
        if locs.size and (locs[0] < lo or locs[-1] > hi):
            raise ConstructionError("atoms must lie inside the support")
        locs.setflags(write=False)
        masses.setflags(write=False)
        self.lo = lo
        self.hi = hi
        self.atom_locs = locs
        self.atom_masses = masses
        self.continuous = continuous
        self.kind = kind
        self._cum_atoms = np.concatenate([[0.0], np.cumsum(masses)])
        if check:
            defect = self.audit_normalization()
            if defect > NORMALIZATION_TOL:
                raise ConstructionError(f"total mass differs from 1 by {defect:.3g}")

    @property
    def continuous_mass(self):
        return 0.0 if self.continuous is None else self.continuous.mass

    @property
    def total_mass(self):
        return float(self.atom_masses.sum()) + self.continuous_mass

    def audit_normalization(self):
        """``|total mass - 1|``."""
        return abs(self.total_mass - 1.0)

    def mass_at(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atom_locs, x, side="left")
        idx_c = np.minimum(idx, max(self.atom_locs.size - 1, 0))
        if self.atom_locs.size == 0:
            return np.zeros(x.shape)
        hit = (idx < self.atom_locs.size) & (self.atom_locs[idx_c] == x)
        return np.where(hit, self.atom_masses[idx_c], 0.0)

    def pdf(self, x):
        """Density of the continuous part (atoms excluded)."""
        x = np.asarray(x, dtype=float)
        if self.continuous is None:
            return np.zeros(x.shape)
        return self.continuous.pdf(x)

    def _atoms_upto(self, x, side):
        return self._cum_atoms[np.searchsorted(self.atom_locs, x, side=side)]

    def cdf(self, x):
        """Right-continuous CDF."""
        x = np.asarray(x, dtype=float)
        val = self._atoms_upto(x, "right")
        if self.continuous is not None:
            val = val + self.continuous.cdf(x)
        val = np.where(x >= self.hi, 1.0, val)
        return np.clip(val, 0.0, 1.0)

    def cdf_left(self, x):
        """Left limit ``F(x^-)``: the CDF minus any atom sitting at ``x``."""
        x = np.asarray(x, dtype=float)
        val = self._atoms_upto(x, "left")
        if self.continuous is not None:
            val = val + self.continuous.cdf(x)
        val = np.where(x > self.hi, 1.0, val)
        return np.clip(val, 0.0, 1.0)

    def quantile(self, u):
        """Generalised inverse ``inf{x : F(x) >= u}`` for ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise DomainError("quantile level must lie in the open interval (0, 1)")
        return self._ppf(u)

    def _ppf(self, u):
        # bisection on the right-continuous CDF; converges to the left end of plateaus
        u = np.asarray(u, dtype=float)
        lo = np.full(u.shape, self.lo)
        hi = np.full(u.shape, self.hi)
        at_lo = self.cdf(lo) >= u
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            up = self.cdf(mid) >= u
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
        return np.where(at_lo, self.lo, hi)

    def moments(self, tol=1e-10):
        """Mean and variance (atoms plus quadrature of the continuous part)."""
        m1 = float(np.dot(self.atom_locs, self.atom_masses))
        m2 = float(np.dot(self.atom_locs ** 2, self.atom_masses))
        if self.continuous is not None and self.hi > self.lo:
            edges = np.unique(np.concatenate([[self.lo, self.hi], self.continuous.breakpoints]))
            a, b = edges[:-1], edges[1:]
            pdf = self.continuous.pdf
            v, _ = integrate_panels(lambda t, own: t ** (own + 1) * pdf(t),
                                    np.concatenate([a, a]), np.concatenate([b, b]),
                                    owner=np.repeat([0, 1], a.size), n_integrals=2,
                                    tol=tol, limit=200)
            m1 += v[0]
            m2 += v[1]
        return m1, max(m2 - m1 * m1, 0.0)

    def atoms(self):
        return list(zip(self.atom_locs.tolist(), self.atom_masses.tolist()))

    def __repr__(self):
        return (f"MixedDistribution(kind={self.kind!r}, support=[{self.lo:g}, {self.hi:g}], "
                f"atoms={len(self.atom_locs)}, continuous_mass={self.continuous_mass:.6g})")


def cdf(mx, x):
    return mx.cdf(x)


def cdf_left(mx, x):
    return mx.cdf_left(x)


def quantile(mx, u):
    return mx.quantile(u)


def moments(mx):
    return mx.moments()


def audit_normalization(mx):
    return mx.audit_normalization()
