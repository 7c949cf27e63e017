"""More than two farms: critical points and a recursive pairwise fold.

The sum of N farm outputs changes analytic form only at subset sums of the
rated powers (the critical points).  Exact N-dimensional corner masses would
need a full N-variate copula; instead :func:`aggregate_recursive` folds the
farms pairwise, linking the running aggregate to the next farm with a
bivariate copula.  That is exact for N = 2 and for independent farms at any
N, and an approximation otherwise: under dependence the result depends on
the fold order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .copulas import Independence
from .errors import DomainError
from .mixed import MixedDistribution, TabulatedContinuous, chebyshev_knots
from .pairsum import SumOptions, sum_distribution
from .quadrature import integrate_panels

MAX_FARMS = 12
DEDUP_RTOL = 1e-9


@dataclass(frozen=True)
class CriticalPoints:
    rated: tuple
    points: np.ndarray
    multiplicity: np.ndarray
    n_subsets: int

    @property
    def n(self):
        return len(self.rated)

    @property
    def segments(self):
        return list(zip(self.points[:-1], self.points[1:]))


def subset_sums(rated):
    rated = np.asarray(rated, dtype=float)
    masks = (np.arange(2 ** rated.size)[:, None] >> np.arange(rated.size)) & 1
    return masks @ rated


def _dedup(values, scale):
    values = np.sort(np.asarray(values, dtype=float))
    tol = DEDUP_RTOL * scale
    points, counts = [], []
    for v in values:
        if points and v - points[-1] <= tol:
            counts[-1] += 1
        else:
            points.append(v)
            counts.append(1)
    return np.array(points), np.array(counts)


def critical_points(rated):
    """Sorted, deduplicated subset sums of the rated powers."""
    rated = [float(r) for r in rated]
    if not rated:
        raise DomainError("need at least one rated power")
    if any(not (r > 0 and np.isfinite(r)) for r in rated):
        raise DomainError("rated powers must be positive and finite")
    if len(rated) > MAX_FARMS:
        raise DomainError(f"at most {MAX_FARMS} farms supported, got {len(rated)}")
    sums = subset_sums(rated)
    points, counts = _dedup(sums, sum(rated))
    return CriticalPoints(tuple(rated), points, counts, int(sums.size))


def _special_points(m):
    pts = [m.lo, m.hi, *m.atom_locs.tolist()]
    if m.continuous is not None:
        pts.extend(m.continuous.breakpoints)
    return np.unique(pts)


def dependent_sum(x, y, cp, options=None):
    """Distribution of ``X + Y`` for arbitrary mixed ``X``, ``Y`` joined by ``cp``.

    Every atom pair contributes the copula volume of its rectangle; every
    atom of one variable paired with the continuous part of the other adds an
    edge density; the two continuous parts add the dependent convolution
    integral.  The result carries an interpolated density table.
    """
    opts = options or SumOptions()
    C, pu, pv, dens = cp._cdf, cp._partial_u, cp._partial_v, cp._density
    scale = (x.hi - x.lo) + (y.hi - y.lo)

    # atoms: rectangle volumes [F(a-), F(a)] x [G(b-), G(b)]
    fx, fx_ = x.cdf(x.atom_locs), x.cdf_left(x.atom_locs)
    gy, gy_ = y.cdf(y.atom_locs), y.cdf_left(y.atom_locs)
    U, U_ = fx[:, None], fx_[:, None]
    V, V_ = gy[None, :], gy_[None, :]
    vol = C(U, V) - C(U_, V) - C(U, V_) + C(U_, V_)
    loc = (x.atom_locs[:, None] + y.atom_locs[None, :]).ravel()
    vol = np.clip(vol.ravel(), 0.0, 1.0)
    order = np.argsort(loc, kind="stable")
    loc, vol = loc[order], vol[order]
    locs, masses = [], []
    for l, v in zip(loc, vol):
        if locs and l - locs[-1] <= DEDUP_RTOL * scale:
            masses[-1] += v
        else:
            locs.append(l)
            masses.append(v)

    lo, hi = x.lo + y.lo, x.hi + y.hi
    sx, sy = _special_points(x), _special_points(y)
    edges, _ = _dedup((sx[:, None] + sy[None, :]).ravel(), scale)
    edges = edges[(edges >= lo) & (edges <= hi)]

    xc, yc = x.continuous, y.continuous

    def density(s):
        out = np.zeros(s.shape)
        if yc is not None:
            for a, fa, fa_ in zip(x.atom_locs, fx, fx_):
                t = s - a
                inside = (t > yc.lo) & (t < yc.hi)
                if inside.any():
                    tt = t[inside]
                    g = y.cdf(tt)
                    out[inside] += (pv(fa, g) - pv(fa_, g)) * yc.pdf(tt)
        if xc is not None:
            for b, gb, gb_ in zip(y.atom_locs, gy, gy_):
                t = s - b
                inside = (t > xc.lo) & (t < xc.hi)
                if inside.any():
                    tt = t[inside]
                    f = x.cdf(tt)
                    out[inside] += (pu(f, gb) - pu(f, gb_)) * xc.pdf(tt)
        if xc is not None and yc is not None:
            t_lo = np.maximum(xc.lo, s - yc.hi)
            t_hi = np.minimum(xc.hi, s - yc.lo)
            cuts = np.concatenate([np.broadcast_to(sx, (s.size, sx.size)),
                                   s[:, None] - sy[None, :]], axis=1)
            cuts = np.sort(np.clip(cuts, t_lo[:, None], np.maximum(t_lo, t_hi)[:, None]), axis=1)
            grid = np.concatenate([t_lo[:, None], cuts, np.maximum(t_lo, t_hi)[:, None]], axis=1)
            a, b = grid[:, :-1].ravel(), grid[:, 1:].ravel()
            owner = np.repeat(np.arange(s.size), grid.shape[1] - 1)

            def f(t, own):
                ss = s[own]
                return dens(x.cdf(t), y.cdf(ss - t)) * xc.pdf(t) * yc.pdf(ss - t)

            inner, _ = integrate_panels(f, a, b, owner=owner, n_integrals=s.size,
                                        tol=opts.tol, limit=opts.limit)
            out += inner
        return out

    knots = [chebyshev_knots(a, b, opts.knots) for a, b in zip(edges[:-1], edges[1:])]
    values = [density(k) for k in knots]
    table = TabulatedContinuous(edges, knots, values)
    return MixedDistribution(lo, hi, locs, masses, table, kind="recursive")


def _fold_order(farms, order):
    if order in (None, "ascending"):
        return sorted(range(len(farms)), key=lambda i: (farms[i].hi, i))
    if order == "given":
        return list(range(len(farms)))
    idx = [int(i) for i in order]
    if sorted(idx) != list(range(len(farms))):
        raise DomainError("fold order must be a permutation of the farm indices")
    return idx


def aggregate_recursive(farms, copulas=None, order="ascending", options=None):
    """Left fold of pairwise dependent sums over ``farms``.

    ``copulas[i]`` links the aggregate of the first ``i + 1`` farms (in fold
    order) to the next farm; ``None`` means all independent.  ``order`` is
    ``"ascending"`` (by rated power, the default), ``"given"``, or an explicit
    permutation.  For N > 2 with dependent links this is an approximation.
    """
    farms = list(farms)
    n = len(farms)
    if n < 1:
        raise DomainError("need at least one farm")
    if copulas is None:
        copulas = [Independence()] * (n - 1)
    copulas = list(copulas)
    if len(copulas) != n - 1:
        raise DomainError(f"{n} farms need {n - 1} pairwise copulas, got {len(copulas)}")
    if n == 1:
        return farms[0]
    opts = options or SumOptions()
    idx = _fold_order(farms, order)
    if n == 2:
        return sum_distribution(farms[idx[0]], farms[idx[1]], copulas[0], opts).distribution

    # intermediate steps only need the quadrature tables, not the GMM compaction
    opts = replace(opts, gmm_components=None, density_mode="quadrature")
    first = sum_distribution(farms[idx[0]], farms[idx[1]], copulas[0], opts).distribution
    acc = MixedDistribution(first.lo, first.hi, first.atom_locs, first.atom_masses,
                            first.continuous.with_interpolated_pdf(), kind="recursive")
    for step, i in enumerate(idx[2:], start=1):
        acc = dependent_sum(acc, farms[i], copulas[step], opts)
    return acc
