"""Bivariate copulas: CDF, conditional derivatives, density and sampling."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError

CHUNK = 4096
_CLAMP = 1e-12


def _unit(x, name, open_=False):
    x = np.asarray(x, dtype=float)
    bad = (x <= 0) | (x >= 1) if open_ else (x < 0) | (x > 1)
    if np.any(bad | np.isnan(x)):
        interval = "(0, 1)" if open_ else "[0, 1]"
        raise DomainError(f"copula argument {name} must lie in {interval}")
    return x


def chunk_generator(seed, index):
    """Independent generator for chunk ``index`` of a seeded stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def chunked(n, seed, draw, chunk=CHUNK, workers=1):
    """Run ``draw(rng, size)`` over fixed-size chunks and stack the results.

    The output depends only on ``(seed, n, chunk)``, never on ``workers``.
    """
    if n < 1:
        raise DomainError("sample size must be at least 1")
    sizes = [min(chunk, n - start) for start in range(0, n, chunk)]

    def job(i):
        return draw(chunk_generator(seed, i), sizes[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    return np.concatenate(parts, axis=0)


class Copula:
    """Common interface; subclasses implement the ``_``-prefixed kernels."""

    exchangeable = True

    def cdf(self, u, v):
        u, v = _unit(u, "u"), _unit(v, "v")
        return self._cdf(u, v)

    def partial_u(self, u, v):
        """dC/du, i.e. P(V <= v | U = u)."""
        u, v = _unit(u, "u"), _unit(v, "v")
        if np.any(u == 0):
            raise DomainError("partial_u is undefined at u = 0")
        return self._partial_u(u, v)

    def partial_v(self, u, v):
        """dC/dv, i.e. P(U <= u | V = v)."""
        u, v = _unit(u, "u"), _unit(v, "v")
        if np.any(v == 0):
            raise DomainError("partial_v is undefined at v = 0")
        return self._partial_v(u, v)

    def _partial_v(self, u, v):
        # valid for exchangeable families, C(u, v) = C(v, u)
        return self._partial_u(v, u)

    def density(self, u, v):
        u, v = _unit(u, "u", open_=True), _unit(v, "v", open_=True)
        return self._density(u, v)

    def flipped(self):
        """Copula of ``(V, U)``."""
        if self.exchangeable:
            return self
        raise NotImplementedError

    def sample(self, n, seed=0, chunk=CHUNK, workers=1):
        """``(n, 2)`` array of dependent uniforms, reproducible per seed."""
        return chunked(n, seed, self._draw, chunk=chunk, workers=workers)


@dataclass(frozen=True)
class Independence(Copula):
    def _cdf(self, u, v):
        return u * v

    def _partial_u(self, u, v):
        return np.broadcast_to(v, np.broadcast(u, v).shape).astype(float)

    def _density(self, u, v):
        return np.ones(np.broadcast(u, v).shape)

    def _draw(self, rng, size):
        return rng.random((size, 2))

    def kendall_tau(self):
        return 0.0

    def to_dict(self):
        return {"family": "independence"}


@dataclass(frozen=True)
class Gumbel(Copula):
    """Gumbel-Hougaard copula ``exp(-[(-ln u)^a + (-ln v)^a]^(1/a))``, ``a >= 1``."""

    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 1.0):
            raise ConstructionError(f"Gumbel copula needs alpha >= 1, got {self.alpha}")

    def _logs(self, u, v):
        u = np.clip(u, _CLAMP, 1.0 - _CLAMP)
        v = np.clip(v, _CLAMP, 1.0 - _CLAMP)
        x = -np.log(u)
        y = -np.log(v)
        lx, ly = np.log(x), np.log(y)
        a = self.alpha
        s = np.exp(a * lx) + np.exp(a * ly)
        return u, v, x, y, lx, ly, s

    def _cdf(self, u, v):
        _, _, _, _, _, _, s = self._logs(u, v)
        c = np.exp(-s ** (1.0 / self.alpha))
        c = np.where((u == 0) | (v == 0), 0.0, c)
        c = np.where(u == 1, v, c)
        return np.where(v == 1, u, c)

    def _partial_u(self, u, v):
        a = self.alpha
        uc, _, _, _, lx, _, s = self._logs(u, v)
        ls = np.log(s)
        c = np.exp(-np.exp(ls / a))
        d = c * np.exp((1.0 / a - 1.0) * ls + (a - 1.0) * lx) / uc
        d = np.where(v == 0, 0.0, d)
        return np.clip(np.where(v == 1, 1.0, d), 0.0, 1.0)

    def _density(self, u, v):
        a = self.alpha
        uc, vc, _, _, lx, ly, s = self._logs(u, v)
        ls = np.log(s)
        root = np.exp(ls / a)
        log_c = (-root + (a - 1.0) * (lx + ly) + (2.0 / a - 2.0) * ls
                 - np.log(uc) - np.log(vc) + np.log1p((a - 1.0) / root))
        return np.exp(log_c)

    def _draw(self, rng, size):
        a = 1.0 / self.alpha
        theta = rng.uniform(0.0, np.pi, size)
        w = rng.standard_exponential(size)
        e = rng.standard_exponential((size, 2))
        if a < 1.0:
            # positive a-stable frailty with Laplace transform exp(-t^a) (Kanter/CMS)
            frailty = (np.sin(a * theta) / np.sin(theta) ** (1.0 / a)
                       * (np.sin((1.0 - a) * theta) / w) ** ((1.0 - a) / a))
        else:
            frailty = np.ones(size)
        return np.exp(-(e / frailty[:, None]) ** a)

    def kendall_tau(self):
        return 1.0 - 1.0 / self.alpha

    def to_dict(self):
        return {"family": "gumbel", "alpha": self.alpha}


def make_copula(family, alpha=None):
    family = family.lower()
    if family in ("independence", "product"):
        return Independence()
    if family == "gumbel":
        if alpha is None:
            raise ConstructionError("Gumbel copula requires alpha")
        return Gumbel(float(alpha))
    raise ConstructionError(f"unknown copula family {family!r}")


def kendall_tau(cp):
    return cp.kendall_tau()
