"""Distribution of the sum of two copula-dependent farm outputs.

With rated powers relabelled so that ``R1 <= R2`` the sum ``P1 + P2`` has
atoms at ``0, R1, R2, R1 + R2`` and a density on three regions::

    I   : 0  < s < R1
    II  : R1 < s < R2
    III : R2 < s < R1 + R2

Each region density is a sum of edge terms (one farm sitting on an atom, the
other on its ramp) and the dependent convolution integral over the ramps.
Marginal CDFs ``W_i`` used as copula arguments never include the rated atom
inside a region, so they stay inside ``[W_i(0), 1 - rated mass]``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, UnsupportedShapeError
from .gmm import GmmOptions, fit_gmm
from .mixed import MixedDistribution, TabulatedContinuous, chebyshev_knots
from .quadrature import integrate_panels


@dataclass(frozen=True)
class SumOptions:
    tol: float = 1e-9
    limit: int = 60
    knots: int = 2048
    gmm_components: int | None = None
    gmm_points: int = 200
    density_mode: str = "quadrature"  # or "gmm"
    gmm_options: GmmOptions = field(default_factory=GmmOptions)


def _check_shape(m):
    if m.lo != 0.0:
        raise UnsupportedShapeError("farm output must have support starting at 0")
    extra = [x for x in m.atom_locs if x not in (0.0, m.hi)]
    if extra:
        raise UnsupportedShapeError(f"unexpected atoms at {extra}; only 0 and rated power allowed")


def _zero(p):
    return np.zeros(np.shape(p))


def _ramp(m):
    """Ramp density (closed at the ends when available) and ramp CDF of a marginal."""
    if m.continuous is None:
        return _zero, _zero
    return getattr(m.continuous, "pdf_closed", m.continuous.pdf), m.continuous.cdf


class _Pair:
    """Two farm marginals with ``R1 <= R2`` and their copula."""

    def __init__(self, m1, m2, cp):
        _check_shape(m1)
        _check_shape(m2)
        self.swapped = m1.hi > m2.hi
        if self.swapped:
            m1, m2, cp = m2, m1, cp.flipped()
        self.m1, self.m2, self.cp = m1, m2, cp
        self.r1, self.r2 = m1.hi, m2.hi
        self.z1 = float(m1.cdf(0.0))
        self.z2 = float(m2.cdf(0.0))
        self.top1 = float(m1.cdf_left(self.r1))
        self.top2 = float(m2.cdf_left(self.r2))
        self._pdf1, self._ramp1 = _ramp(m1)
        self._pdf2, self._ramp2 = _ramp(m2)

    # ramp CDFs: W_i(p) for 0 <= p < R_i and the left limit at R_i
    def w1cdf(self, p):
        return self.z1 + self._ramp1(p)

    def w2cdf(self, p):
        return self.z2 + self._ramp2(p)

    # ramp densities, continuous up to the closed ends of [0, R_i]
    def w1(self, p):
        return self._pdf1(p)

    def w2(self, p):
        return self._pdf2(p)

    @property
    def regions(self):
        r1, r2 = self.r1, self.r2
        regions = [(1, 0.0, r1)]
        if r2 > r1:
            regions.append((2, r1, r2))
        regions.append((3, r2, r1 + r2))
        return regions

    def impulses(self):
        C = self.cp.cdf
        phi1 = C(self.z1, self.z2)
        phi2 = self.z2 - C(self.top1, self.z2)
        phi3 = self.z1 - C(self.z1, self.top2)
        phi4 = 1.0 - self.top1 - self.top2 + C(self.top1, self.top2)
        # cancellation can leave -1e-17 where the exact mass is zero
        return tuple(max(float(p), 0.0) for p in (phi1, phi2, phi3, phi4))

    def t_range(self, s, region):
        s = np.asarray(s, dtype=float)
        if region == 1:
            return np.zeros_like(s), s
        if region == 2:
            return np.zeros_like(s), np.full_like(s, self.r1)
        return s - self.r2, np.full_like(s, self.r1)

    def integrand(self, t, s):
        u = self.w1cdf(t)
        v = self.w2cdf(s - t)
        return self.cp._density(u, v) * self.w1(t) * self.w2(s - t)

    def interior(self, s, t_lo, t_hi, tol, limit):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t_lo = np.broadcast_to(t_lo, s.shape)
        t_hi = np.broadcast_to(t_hi, s.shape)
        vals, errs = integrate_panels(lambda t, own: self.integrand(t, s[own]),
                                      t_lo, t_hi, tol=tol, limit=limit)
        return vals, errs

    def edges(self, s, region):
        s = np.asarray(s, dtype=float)
        pu, pv = self.cp._partial_u, self.cp._partial_v
        if region == 1:
            return (pv(self.z1, self.w2cdf(s)) * self.w2(s)
                    + pu(self.w1cdf(s), self.z2) * self.w1(s))
        if region == 2:
            y = s - self.r1
            return (pv(self.z1, self.w2cdf(s)) * self.w2(s)
                    + (1.0 - pv(self.top1, self.w2cdf(y))) * self.w2(y))
        x = s - self.r2
        y = s - self.r1
        return ((1.0 - pu(self.w1cdf(x), self.top2)) * self.w1(x)
                + (1.0 - pv(self.top1, self.w2cdf(y))) * self.w2(y))

    def region_of(self, s):
        s = np.asarray(s, dtype=float)
        reg = np.where(s < self.r1, 1, np.where(s < self.r2, 2, 3))
        return np.where((s <= 0) | (s >= self.r1 + self.r2), 0, reg)

    def density(self, s, tol=1e-9, limit=60):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        reg = self.region_of(s)
        for k in (1, 2, 3):
            sel = reg == k
            if sel.any():
                ss = s[sel]
                lo, hi = self.t_range(ss, k)
                inner, _ = self.interior(ss, lo, hi, tol, limit)
                out[sel] = self.edges(ss, k) + inner
        return out

    def cdf_direct(self, s, tol=1e-10, limit=200):
        """CDF from copula values and conditional CDFs, without the density."""
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float)).ravel()
        C = self.cp._cdf
        pu = self.cp._partial_u
        r1, r2, z1, z2 = self.r1, self.r2, self.z1, self.z2
        phis = self.impulses()
        out = np.zeros(s.shape)
        for loc, mass in zip((0.0, r1, r2, r1 + r2), phis):
            out += np.where(s >= loc, mass, 0.0)
        pos = s > 0
        sp = np.where(pos, s, 0.0)
        # one farm at zero, the other on its ramp
        out += np.where(pos, C(z1, self.w2cdf(np.minimum(sp, r2))) - C(z1, z2), 0.0)
        out += np.where(pos, C(self.w1cdf(np.minimum(sp, r1)), z2) - C(z1, z2), 0.0)
        # one farm at rated power
        y = np.clip(s - r1, 0.0, r2)
        v = self.w2cdf(y)
        out += np.where(s > r1, (v - z2) - (C(self.top1, v) - C(self.top1, z2)), 0.0)
        x = np.clip(s - r2, 0.0, r1)
        u = self.w1cdf(x)
        out += np.where(s > r2, (u - z1) - (C(u, self.top2) - C(z1, self.top2)), 0.0)
        # both on ramps: integrate P(0 < P2 <= s - t | P1 = t) w1(t)
        hi = np.clip(sp, 0.0, r1)
        kink = np.clip(sp - r2, 0.0, hi)
        a = np.concatenate([np.zeros_like(s), kink])
        b = np.concatenate([kink, hi])
        owner = np.concatenate([np.arange(s.size), np.arange(s.size)])

        def f(t, own):
            ss = s[own]
            top = self.w2cdf(np.clip(ss - t, 0.0, r2))
            wt = self.w1cdf(t)
            return (pu(wt, top) - pu(wt, z2)) * self.w1(t)

        inner, _ = integrate_panels(f, a, b, owner=owner, n_integrals=s.size, tol=tol, limit=limit)
        return np.clip(out + inner, 0.0, 1.0).reshape(shape)


@dataclass(frozen=True)
class SumResult:
    """Analytical distribution of ``P1 + P2``.

    ``impulses`` holds the masses at ``0, R1, R2, R1 + R2``; ``distribution``
    is the assembled :class:`MixedDistribution` (equal rated powers merge the
    two middle atoms).
    """

    r1: float
    r2: float
    impulses: tuple
    regions: tuple
    region_mass: tuple
    distribution: MixedDistribution
    gmm: dict
    swapped: bool
    quad_error: float
    timings: dict
    _pair: _Pair = field(repr=False)
    _options: SumOptions = field(repr=False)

    @property
    def breakpoints(self):
        return (0.0, self.r1, self.r2, self.r1 + self.r2)

    @property
    def total_mass(self):
        return float(sum(self.impulses) + sum(self.region_mass))

    def density(self, s, mode=None):
        mode = mode or self._options.density_mode
        s = np.asarray(s, dtype=float)
        if mode == "quadrature":
            return self._pair.density(s, self._options.tol, self._options.limit)
        if mode == "table":
            return self.distribution.continuous.pdf_interpolated(s)
        if mode == "gmm":
            return _gmm_density(self._pair, self.gmm, s)
        raise ValueError(f"unknown density mode {mode!r}")

    def cdf(self, s):
        return self.distribution.cdf(s)

    def cdf_left(self, s):
        return self.distribution.cdf_left(s)

    def cdf_direct(self, s):
        return self._pair.cdf_direct(s)

    def interior(self, s):
        """Dependent-convolution term of the density alone."""
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        reg = self._pair.region_of(s)
        for k in (1, 2, 3):
            sel = reg == k
            if sel.any():
                lo, hi = self._pair.t_range(s[sel], k)
                out[sel], _ = self._pair.interior(s[sel], lo, hi, self._options.tol,
                                                  self._options.limit)
        return out

    def summary(self):
        out = {
            "rated": [self.r1, self.r2],
            "swapped": self.swapped,
            "impulses": {
                "phi1": {"location": 0.0, "mass": self.impulses[0]},
                "phi2": {"location": self.r1, "mass": self.impulses[1]},
                "phi3": {"location": self.r2, "mass": self.impulses[2]},
                "phi4": {"location": self.r1 + self.r2, "mass": self.impulses[3]},
            },
            "region_mass": {f"region{k}": m for (k, _, _), m in zip(self.regions, self.region_mass)},
            "total_mass": self.total_mass,
            "normalization_defect": abs(self.total_mass - 1.0),
            "max_quadrature_error": self.quad_error,
            "gmm": {f"region{k}": g.to_dict() for k, g in self.gmm.items()},
        }
        return out


def _gmm_density(pair, gmm, s):
    out = np.zeros(s.shape)
    reg = pair.region_of(s)
    for k in (1, 2, 3):
        sel = reg == k
        if sel.any():
            if k not in gmm:
                raise ValueError(f"no GMM fitted for region {k}")
            out[sel] = pair.edges(s[sel], k) + gmm[k](s[sel])
    return out


def impulse_sizes(m1, m2, cp):
    """Atom masses ``(Phi1, Phi2, Phi3, Phi4)`` at ``0, R1, R2, R1 + R2`` (``R1 <= R2``)."""
    return _Pair(m1, m2, cp).impulses()


def region_density(m1, m2, cp, s, tol=1e-9, limit=60):
    """Continuous density of ``P1 + P2``; zero outside ``(0, R1 + R2)``."""
    return _Pair(m1, m2, cp).density(np.asarray(s, dtype=float), tol, limit)


def interior_integral(m1, m2, cp, s, t_lo, t_hi, tol=1e-9, limit=60):
    """Integral of ``c(W1(t), W2(s-t)) w1(t) w2(s-t)`` over ``t`` in ``(t_lo, t_hi)``."""
    pair = _Pair(m1, m2, cp)
    vals, _ = pair.interior(s, t_lo, t_hi, tol, limit)
    return vals if np.ndim(s) else float(vals[0])


def sum_distribution(m1, m2, cp, options=None):
    """Build the :class:`SumResult` for ``P1 + P2``."""
    opts = options or SumOptions()
    t0 = time.perf_counter()
    pair = _Pair(m1, m2, cp)
    phis = pair.impulses()

    gmm = {}
    if opts.gmm_components or opts.density_mode == "gmm":
        n = opts.gmm_components or 6
        for k, lo, hi in pair.regions:
            xs = np.linspace(lo, hi, opts.gmm_points + 2)[1:-1]
            t_lo, t_hi = pair.t_range(xs, k)
            ys, _ = pair.interior(xs, t_lo, t_hi, opts.tol, opts.limit)
            try:
                fit = fit_gmm(xs, ys, n, opts.gmm_options)
                fit.diagnostics["converged"] = True
            except ConvergenceError as exc:
                # the compaction is optional; keep the best iterate and say so
                fit = exc.best
                fit.diagnostics["converged"] = False
            gmm[k] = fit
    t1 = time.perf_counter()

    edges, knots, values = [0.0], [], []
    quad_err = 0.0
    for k, lo, hi in pair.regions:
        xs = chebyshev_knots(lo, hi, opts.knots)
        if opts.density_mode == "gmm":
            ys = pair.edges(xs, k) + gmm[k](xs)
        else:
            t_lo, t_hi = pair.t_range(xs, k)
            inner, errs = pair.interior(xs, t_lo, t_hi, opts.tol, opts.limit)
            quad_err = max(quad_err, float(errs.max()))
            ys = pair.edges(xs, k) + inner
        edges.append(hi)
        knots.append(xs)
        values.append(ys)

    if opts.density_mode == "gmm":
        pdf_fn = lambda s: _gmm_density(pair, gmm, np.asarray(s, dtype=float))  # noqa: E731
    else:
        pdf_fn = lambda s: pair.density(np.asarray(s, dtype=float), opts.tol, opts.limit)  # noqa: E731
    table = TabulatedContinuous(edges, knots, values, pdf_fn=pdf_fn)

    r1, r2 = pair.r1, pair.r2
    locs = [0.0, r1, r2, r1 + r2]
    masses = list(phis)
    if r1 == r2:
        locs = [0.0, r1, r1 + r2]
        masses = [phis[0], phis[1] + phis[2], phis[3]]
    # GMM tables are an approximation: their mass defect is reported, not enforced
    dist = MixedDistribution(0.0, r1 + r2, locs, masses, table, kind="pair-sum",
                             check=opts.density_mode != "gmm")
    t2 = time.perf_counter()

    return SumResult(
        r1=r1, r2=r2, impulses=phis,
        regions=tuple(pair.regions),
        region_mass=tuple(float(m) for m in table.segment_mass),
        distribution=dist, gmm=gmm, swapped=pair.swapped, quad_error=quad_err,
        timings={"gmm_seconds": t1 - t0, "tables_seconds": t2 - t1, "total_seconds": t2 - t0},
        _pair=pair, _options=opts,
    )


def sum_cdf(sr, s):
    return sr.cdf(s)
