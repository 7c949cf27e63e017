"""Monte Carlo reference for the analytical sum distribution.

Dependent uniforms come from the copula sampler and are pushed through each
farm's mixed quantile, so atoms are reproduced exactly.  The report compares
the analytical CDF and atom masses with their empirical counterparts and
times both routes.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import gaussian_kde

from .copulas import CHUNK, Independence, chunk_generator
from .errors import DomainError
from .multifarm import aggregate_recursive
from .pairsum import SumOptions, sum_distribution

_LO = np.finfo(float).tiny
_HI = np.nextafter(1.0, 0.0)

KS_TOL = 0.008
ATOM_TOL = 0.005


def sample_sum(m1, m2, cp, n, seed=0, chunk=CHUNK):
    """``n`` draws of ``P1 + P2``; identical for identical ``(n, seed, chunk)``."""
    uv = np.clip(cp.sample(n, seed, chunk=chunk), _LO, _HI)
    return m1._ppf(uv[:, 0]) + m2._ppf(uv[:, 1])


def sample_independent_sum(farms, n, seed=0, chunk=CHUNK):
    """``n`` draws of the sum of independent farm outputs."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    k = len(farms)
    parts = []
    for i, start in enumerate(range(0, n, chunk)):
        size = min(chunk, n - start)
        u = np.clip(chunk_generator(seed, i).random((size, k)), _LO, _HI)
        parts.append(sum(f._ppf(u[:, j]) for j, f in enumerate(farms)))
    return np.concatenate(parts)


def ks_distance(cdf, samples, cdf_left=None):
    """Sup-distance between a CDF and the empirical CDF of ``samples``.

    Evaluated at every distinct sample value from both sides, so ties (atoms)
    are handled exactly when ``cdf_left`` supplies left limits.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("need at least one sample")
    cdf_left = cdf_left or cdf
    values, first = np.unique(x, return_index=True)
    below = first / n
    upto = np.append(first[1:], n) / n
    d_right = np.abs(np.asarray(cdf(values), dtype=float) - upto)
    d_left = np.abs(np.asarray(cdf_left(values), dtype=float) - below)
    return float(max(d_right.max(), d_left.max()))


def atom_frequencies(samples, locations):
    samples = np.asarray(samples)
    return np.array([np.count_nonzero(samples == loc) for loc in locations]) / samples.size


def empirical_summary(samples, grid, atom_locs):
    """What the Monte Carlo route delivers: atom frequencies, ECDF and a KDE density."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    ordered = np.sort(samples)
    ecdf = np.searchsorted(ordered, grid, side="right") / n
    freqs = atom_frequencies(samples, atom_locs)
    cont = samples[~np.isin(samples, atom_locs)]
    pdf = np.zeros_like(grid)
    if cont.size > 1:
        pdf = gaussian_kde(cont)(grid) * cont.size / n
    return {"atom_frequency": freqs, "ecdf": ecdf, "pdf": pdf}


@dataclass
class AtomCheck:
    location: float
    analytical: float
    empirical: float

    @property
    def diff(self):
        return abs(self.analytical - self.empirical)


@dataclass
class McsReport:
    n: int
    seed: int
    ks: float
    atoms: list
    timings: dict
    ks_tol: float = KS_TOL
    atom_tol: float = ATOM_TOL
    extra: dict = field(default_factory=dict)

    @property
    def max_atom_diff(self):
        return max((a.diff for a in self.atoms), default=0.0)

    @property
    def passed(self):
        return self.ks <= self.ks_tol and self.max_atom_diff <= self.atom_tol

    def to_dict(self, include_timings=True):
        out = {
            "n": self.n,
            "seed": self.seed,
            "ks": self.ks,
            "ks_tol": self.ks_tol,
            "atoms": [dict(asdict(a), diff=a.diff) for a in self.atoms],
            "max_atom_diff": self.max_atom_diff,
            "atom_tol": self.atom_tol,
            "passed": self.passed,
            **self.extra,
        }
        if include_timings:
            out["timings"] = self.timings
        return out


def timed(fn, repeats=1, warmup=False):
    """Median wall-clock of ``repeats`` calls (after an optional discarded warm-up)."""
    if warmup:
        fn()
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times), times


def compare(sr, samples, seed, ks_tol=KS_TOL, atom_tol=ATOM_TOL, timings=None):
    """Build a report from an analytical result and Monte Carlo samples."""
    dist = sr.distribution if hasattr(sr, "distribution") else sr
    ks = ks_distance(dist.cdf, samples, dist.cdf_left)
    if hasattr(sr, "impulses"):
        locs = list(sr.breakpoints)
        masses = list(sr.impulses)
    else:
        locs = dist.atom_locs.tolist()
        masses = dist.atom_masses.tolist()
    freqs = atom_frequencies(samples, locs)
    if hasattr(sr, "impulses") and sr.r1 == sr.r2:
        # the two middle impulses share a location; compare their sum once
        locs = [locs[0], locs[1], locs[3]]
        masses = [masses[0], masses[1] + masses[2], masses[3]]
        freqs = np.array([freqs[0], freqs[1], freqs[3]])
    atoms = [AtomCheck(float(l), float(m), float(f)) for l, m, f in zip(locs, masses, freqs)]
    return McsReport(n=int(np.size(samples)), seed=seed, ks=ks, atoms=atoms,
                     timings=timings or {}, ks_tol=ks_tol, atom_tol=atom_tol)


# --- scenario pipelines ------------------------------------------------------

def _sum_options(cfg):
    return SumOptions(tol=cfg.tol, knots=cfg.knots,
                      gmm_components=cfg.gmm_components if cfg.gmm_enabled else None)


def output_grid(hi, size):
    return np.linspace(0.0, hi, size) if size > 0 else np.empty(0)


def analytic_pipeline(cfg):
    """Marginals, the analytical sum and its PDF/CDF on the output grid."""
    farms = cfg.marginals()
    opts = _sum_options(cfg)
    if len(farms) == 2:
        result = sum_distribution(farms[0], farms[1], cfg.copula, opts)
        dist = result.distribution
        grid = output_grid(dist.hi, cfg.grid)
        pdf = result.density(grid)
    else:
        order = list(cfg.order) if isinstance(cfg.order, tuple) else cfg.order
        dist = aggregate_recursive(farms, [cfg.copula] * (len(farms) - 1), order, opts)
        result = dist
        grid = output_grid(dist.hi, cfg.grid)
        pdf = dist.pdf(grid)
    return {"result": result, "distribution": dist, "grid": grid, "pdf": pdf,
            "cdf": dist.cdf(grid)}


def mcs_samples(cfg, n, seed):
    farms = cfg.marginals()
    if len(farms) == 2:
        return sample_sum(farms[0], farms[1], cfg.copula, n, seed)
    if len(farms) == 1:
        u = np.clip(cfg.copula.sample(n, seed)[:, 0], _LO, _HI)
        return farms[0]._ppf(u)
    if not isinstance(cfg.copula, Independence):
        raise DomainError("Monte Carlo for more than two farms needs independent farms; "
                          "no N-variate copula is defined for the pairwise fold")
    return sample_independent_sum(farms, n, seed)


def mcs_pipeline(cfg, n, seed, atom_locs):
    """Samples plus the empirical atoms, ECDF and KDE density on the output grid."""
    t0 = time.perf_counter()
    samples = mcs_samples(cfg, n, seed)
    t1 = time.perf_counter()
    hi = float(sum(f.curve.rated for f in cfg.farms))
    summary = empirical_summary(samples, output_grid(hi, cfg.grid), atom_locs)
    summary["samples"] = samples
    summary["sampling_seconds"] = t1 - t0
    return summary


def validate(cfg, n=None, seed=None, repeats=1):
    """Run both routes on a scenario and compare them."""
    n = cfg.mcs_n if n is None else int(n)
    seed = cfg.mcs_seed if seed is None else int(seed)
    if n < 1:
        raise DomainError("Monte Carlo sample size must be at least 1")
    ana, t_ana, _ = timed(lambda: analytic_pipeline(cfg), repeats)
    locs = ana["distribution"].atom_locs
    emp, t_mcs, _ = timed(lambda: mcs_pipeline(cfg, n, seed, locs), repeats)
    report = compare(ana["result"], emp["samples"], seed, cfg.ks_tol, cfg.atom_tol,
                     timings={"analytical_seconds": t_ana, "mcs_seconds": t_mcs,
                              "mcs_sampling_seconds": emp["sampling_seconds"]})
    grid_pdf = ana["pdf"]
    inner = slice(1, -1) if grid_pdf.size > 2 else slice(None)
    report.extra["max_pdf_gap_vs_kde"] = (
        float(np.max(np.abs(grid_pdf[inner] - emp["pdf"][inner]))) if grid_pdf.size else 0.0)
    return report


def bench(cfg, sizes=(50000, 200000), repeats=5, seed=None):
    """Median wall-clock of each route after a discarded warm-up run."""
    seed = cfg.mcs_seed if seed is None else int(seed)
    ana, t_ana, runs = timed(lambda: analytic_pipeline(cfg), repeats, warmup=True)
    locs = ana["distribution"].atom_locs
    out = {"repeats": repeats, "analytical": {"median_seconds": t_ana, "runs": runs}, "mcs": []}
    for n in sizes:
        emp, t_mcs, runs = timed(lambda: mcs_pipeline(cfg, n, seed, locs), repeats, warmup=True)
        out["mcs"].append({"n": int(n), "median_seconds": t_mcs, "runs": runs,
                           "sampling_seconds": emp["sampling_seconds"],
                           "speedup": t_mcs / t_ana})
    return out


def format_timing_table(timings):
    """Plain-text table: Monte Carlo at each sample size versus the analytical model."""
    cols = [f"Sample size={m['n']}" for m in timings["mcs"]]
    vals = [f"{m['median_seconds']:.4f}s" for m in timings["mcs"]]
    width = max([len(c) for c in cols] + [14]) + 2
    head = "".join(c.ljust(width) for c in cols)
    lines = [
        "CPU TIME: PROPOSED MODEL VS MCS",
        "MCS method".ljust(width * len(cols)) + "Proposed model",
        head,
        "".join(v.ljust(width) for v in vals) + f"{timings['analytical']['median_seconds']:.4f}s",
    ]
    return "\n".join(lines)
