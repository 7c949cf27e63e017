"""Scenario files (TOML or JSON) and their validated in-memory form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .copulas import make_copula
from .errors import ConfigError, ConstructionError
from .marginals import GumbelMax, PowerCurve, Weibull, farm_output_distribution

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULT_SCENARIO = {
    "farms": [
        {"speed": {"family": "weibull", "shape": 2.0, "scale": 10.0},
         "curve": {"v_ci": 3.0, "v_r": 12.0, "v_co": 25.0, "rated": 100.0}},
        {"speed": {"family": "gumbel", "location": 10.0, "scale": 8.0},
         "curve": {"v_ci": 3.0, "v_r": 12.0, "v_co": 25.0, "rated": 100.0}},
    ],
    "copula": {"family": "gumbel", "alpha": 3.65},
    "numerics": {"tol": 1e-9, "knots": 2048, "grid": 1001, "order": "ascending"},
    "gmm": {"enabled": True, "components": 6},
    "mcs": {"n": 200000, "seed": 2024},
    "validation": {"ks_tol": 0.008, "atom_tol": 0.005},
    "output": {"dir": "out"},
}


@dataclass(frozen=True)
class FarmSpec:
    speed: Weibull | GumbelMax
    curve: PowerCurve

    def distribution(self):
        return farm_output_distribution(self.speed, self.curve)

    def to_dict(self):
        return {"speed": self.speed.to_dict(), "curve": self.curve.to_dict()}


@dataclass(frozen=True)
class ScenarioConfig:
    farms: tuple
    copula: object
    tol: float = 1e-9
    knots: int = 2048
    grid: int = 1001
    order: str = "ascending"
    gmm_enabled: bool = True
    gmm_components: int = 6
    mcs_n: int = 200000
    mcs_seed: int = 2024
    ks_tol: float = 0.008
    atom_tol: float = 0.005
    out_dir: str = "out"
    source: str | None = field(default=None, compare=False)

    def marginals(self):
        return [f.distribution() for f in self.farms]

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self):
        return {
            "farms": [f.to_dict() for f in self.farms],
            "copula": self.copula.to_dict(),
            "numerics": {"tol": self.tol, "knots": self.knots, "grid": self.grid,
                         "order": self.order},
            "gmm": {"enabled": self.gmm_enabled, "components": self.gmm_components},
            "mcs": {"n": self.mcs_n, "seed": self.mcs_seed},
            "validation": {"ks_tol": self.ks_tol, "atom_tol": self.atom_tol},
            "output": {"dir": self.out_dir},
        }


def _table(raw, key, where):
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"{where}{key}: expected a table")
    return val


def _number(tbl, key, where, default=None, positive=False, integer=False, minimum=None):
    if key not in tbl:
        if default is None:
            raise ConfigError(f"{where}.{key}: required field missing")
        return default
    val = tbl[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{where}.{key}: expected a finite number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{where}.{key}: expected an integer, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{where}.{key}: must be > 0, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{where}.{key}: must be >= {minimum}, got {val!r}")
    return int(val) if integer else float(val)


def _speed(tbl, where):
    family = str(tbl.get("family", "")).lower()
    try:
        if family == "weibull":
            return Weibull(_number(tbl, "shape", where, positive=True),
                           _number(tbl, "scale", where, positive=True))
        if family in ("gumbel", "gumbel_max"):
            return GumbelMax(_number(tbl, "location", where),
                             _number(tbl, "scale", where, positive=True))
    except ConstructionError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.family: expected 'weibull' or 'gumbel', got {tbl.get('family')!r}")


def _curve(tbl, where):
    d = DEFAULT_SCENARIO["farms"][0]["curve"]
    vals = {k: _number(tbl, k, where, default=d[k], positive=True) for k in d}
    try:
        return PowerCurve(**vals)
    except ConstructionError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_scenario(raw, source=None):
    """Validate a scenario mapping; missing optional fields take the defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario: expected a table at top level")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # a summary.json written by a previous run

    farms_raw = raw.get("farms", DEFAULT_SCENARIO["farms"])
    if not isinstance(farms_raw, list) or not farms_raw:
        raise ConfigError("farms: expected a non-empty list of farm tables")
    farms = []
    for i, fr in enumerate(farms_raw):
        where = f"farms[{i}]"
        if not isinstance(fr, dict):
            raise ConfigError(f"{where}: expected a table")
        if "speed" not in fr:
            raise ConfigError(f"{where}.speed: required table missing")
        farms.append(FarmSpec(_speed(_table(fr, "speed", f"{where}."), f"{where}.speed"),
                              _curve(_table(fr, "curve", f"{where}."), f"{where}.curve")))

    cop = _table(raw, "copula", "") or DEFAULT_SCENARIO["copula"]
    family = str(cop.get("family", "gumbel")).lower()
    if family not in ("gumbel", "independence", "product"):
        raise ConfigError(f"copula.family: expected 'gumbel' or 'independence', got {family!r}")
    alpha = None
    if family == "gumbel":
        alpha = _number(cop, "alpha", "copula", default=DEFAULT_SCENARIO["copula"]["alpha"],
                        minimum=1.0)
    copula = make_copula(family, alpha)

    num = _table(raw, "numerics", "")
    dn = DEFAULT_SCENARIO["numerics"]
    order = num.get("order", dn["order"])
    if order not in ("ascending", "given") and not isinstance(order, list):
        raise ConfigError(f"numerics.order: expected 'ascending', 'given' or a list, got {order!r}")
    gmm = _table(raw, "gmm", "")
    dg = DEFAULT_SCENARIO["gmm"]
    enabled = gmm.get("enabled", dg["enabled"])
    if not isinstance(enabled, bool):
        raise ConfigError(f"gmm.enabled: expected true or false, got {enabled!r}")
    mcs = _table(raw, "mcs", "")
    dm = DEFAULT_SCENARIO["mcs"]
    val = _table(raw, "validation", "")
    dv = DEFAULT_SCENARIO["validation"]
    out = _table(raw, "output", "")
    out_dir = out.get("dir", DEFAULT_SCENARIO["output"]["dir"])
    if not isinstance(out_dir, str):
        raise ConfigError(f"output.dir: expected a path string, got {out_dir!r}")

    return ScenarioConfig(
        farms=tuple(farms),
        copula=copula,
        tol=_number(num, "tol", "numerics", dn["tol"], positive=True),
        knots=_number(num, "knots", "numerics", dn["knots"], integer=True, minimum=4),
        grid=_number(num, "grid", "numerics", dn["grid"], integer=True, minimum=0),
        order=tuple(order) if isinstance(order, list) else order,
        gmm_enabled=enabled,
        gmm_components=_number(gmm, "components", "gmm", dg["components"], integer=True, minimum=1),
        mcs_n=_number(mcs, "n", "mcs", dm["n"], integer=True, minimum=1),
        mcs_seed=_number(mcs, "seed", "mcs", dm["seed"], integer=True, minimum=0),
        ks_tol=_number(val, "ks_tol", "validation", dv["ks_tol"], positive=True),
        atom_tol=_number(val, "atom_tol", "validation", dv["atom_tol"], positive=True),
        out_dir=out_dir,
        source=source,
    )


def load_scenario(path=None):
    """Read a TOML or JSON scenario; ``None`` gives the built-in default."""
    if path is None:
        return parse_scenario(DEFAULT_SCENARIO)
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from None
    try:
        if p.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid {'JSON' if p.suffix.lower() == '.json' else 'TOML'}: {exc}") from None
    return parse_scenario(raw, source=str(p))


def default_scenario():
    return parse_scenario(DEFAULT_SCENARIO)
