"""Simulation campaigns: TOML config files in, JSON / text / CSV reports out.

A campaign file is a flat list of ``key = value`` pairs; ``p``, ``n`` and
``r`` may be lists, and the campaign is the grid over ``p`` x ``n`` (x ``r``
for power scenarios).  See README.md for the full key list.
"""

import json
import math
import sys
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .datagen import CovarianceSpec, InnovationSpec, MeanSpec
from .errors import ConfigError
from .harness import (
    SCENARIOS,
    NullStatistics,
    SimConfig,
    collect_null_statistics,
    run_power_experiment,
    run_size_experiment,
)

__all__ = ["Campaign", "CampaignResult", "load_campaign", "parse_campaign", "run_campaign", "write_outputs"]

# key -> (accepted types, default); None default means required or optional-without-default
_KEYS = {
    "name": ((str,), None),
    "scenario": ((str,), None),
    "methods": ((list, str), ["new"]),
    "covariance": ((str,), "ar1"),
    "rho": ((float, int), 0.6),
    "innovation": ((str,), "gaussian"),
    "p": ((int, list), None),
    "n": ((int, list), None),
    "n2": ((int,), None),
    "beta": ((float, int), None),
    "r": ((float, int, list), None),
    "reps": ((int,), 1000),
    "alpha": ((float,), 0.05),
    "seed": ((int,), 0),
    "workers": ((int,), 1),
    "redraw_sigma": ((bool,), True),
    "redraw_mean": ((bool,), True),
    "on_failure": ((str,), "abort"),
}
_REQUIRED = ("scenario", "p", "n")


@dataclass
class Campaign:
    name: str
    scenario: str
    configs: list
    r_grid: list = None
    workers: int = 1
    settings: dict = field(default_factory=dict)


@dataclass
class CampaignResult:
    campaign: Campaign
    cells: list
    runtime: float


def _as_list(value, key, kind, kind_name):
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"field '{key}': list must not be empty")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, kind):
            raise ConfigError(f"field '{key}': expected {kind_name} values, got {v!r}")
    return values


def parse_campaign(data, name="campaign", overrides=None):
    """Build a Campaign from a parsed key-value mapping."""
    data = dict(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    for key in data:
        if key not in _KEYS:
            raise ConfigError(f"unknown field '{key}'; allowed fields: {', '.join(sorted(_KEYS))}")
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(f"missing required field '{key}'")
    settings = {}
    for key, (types, default) in _KEYS.items():
        value = data.get(key, default)
        if value is not None:
            ok = isinstance(value, types) and not (isinstance(value, bool) and bool not in types)
            if not ok:
                names = " or ".join(t.__name__ for t in types)
                raise ConfigError(f"field '{key}': expected {names}, got {value!r}")
        settings[key] = value

    scenario = settings["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"field 'scenario': expected one of {SCENARIOS}, got {scenario!r}")
    methods = _as_list(settings["methods"], "methods", str, "string")
    if scenario == "null_histogram":
        methods = ["new"]
    ps = _as_list(settings["p"], "p", int, "integer")
    ns = _as_list(settings["n"], "n", int, "integer")
    if settings["reps"] < 1:
        raise ConfigError(f"field 'reps': must be at least 1, got {settings['reps']}")
    if not 0.0 < settings["alpha"] < 1.0:
        raise ConfigError(f"field 'alpha': must lie in (0, 1), got {settings['alpha']}")
    if settings["workers"] < 1:
        raise ConfigError(f"field 'workers': must be at least 1, got {settings['workers']}")
    try:
        cov = CovarianceSpec(kind=settings["covariance"], rho=float(settings["rho"]))
        innov = InnovationSpec(settings["innovation"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    power = scenario.endswith("_power")
    r_grid = None
    if power:
        if settings["beta"] is None or settings["r"] is None:
            raise ConfigError(f"scenario {scenario} needs fields 'beta' and 'r'")
        r_grid = [float(r) for r in _as_list(settings["r"], "r", (int, float), "numeric")]

    configs = []
    for cell, (p, n) in enumerate(product(ps, ns)):
        mean = MeanSpec(p=p, beta=float(settings["beta"]), r=r_grid[0]) if power else None
        config = SimConfig(
            scenario=scenario,
            methods=tuple(methods),
            cov=cov,
            innov=innov,
            p=p,
            n=n,
            n2=settings["n2"],
            mean=mean,
            reps=settings["reps"],
            alpha=settings["alpha"],
            master_seed=settings["seed"],
            cell=cell,
            redraw_sigma=settings["redraw_sigma"],
            redraw_mean=settings["redraw_mean"],
            on_failure=settings["on_failure"],
        )
        configs.append(config.validate())
    return Campaign(
        name=settings["name"] or name,
        scenario=scenario,
        configs=configs,
        r_grid=r_grid,
        workers=settings["workers"],
        settings={k: v for k, v in settings.items() if k not in ("workers", "name")},
    )


def load_campaign(path, overrides=None):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_campaign(data, name=path.stem, overrides=overrides)


def run_campaign(campaign, workers=None, progress=None):
    workers = campaign.workers if workers is None else workers
    start = time.perf_counter()
    cells = []
    for config in campaign.configs:
        if campaign.scenario.endswith("_size"):
            cells.append(run_size_experiment(config, workers))
        elif campaign.scenario.endswith("_power"):
            cells.extend(run_power_experiment(config, campaign.r_grid, workers))
        else:
            cells.append(collect_null_statistics(config, workers))
        if progress is not None:
            progress(cells[-1])
    return CampaignResult(campaign, cells, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def result_json(result):
    """Deterministic JSON text; run times are left out so reruns are byte-identical."""
    doc = {
        "name": result.campaign.name,
        "scenario": result.campaign.scenario,
        "settings": result.campaign.settings,
        "cells": [cell.to_dict() for cell in result.cells],
    }
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def _cell_label(config):
    return config.label()


def format_table(result):
    cells = result.cells
    first = cells[0].config
    lines = [
        f"# {result.campaign.name} ({result.campaign.scenario}, {first.cov.label()}, "
        f"{first.innov.kind}, alpha={first.alpha:g}, reps={first.reps})"
    ]
    if isinstance(cells[0], NullStatistics):
        header = ["cell", "df", "KS D", "KS p", "chi2 KS p"]
        rows = []
        for c in cells:
            chi = f"{c.chi2_ks.p_value:.4f}" if c.chi2_ks is not None else "-"
            rows.append([_cell_label(c.config), str(c.df), f"{c.ks.distance:.4f}", f"{c.ks.p_value:.4f}", chi])
    else:
        methods = list(cells[0].rates)
        header = ["method"] + [_cell_label(c.config) for c in cells]
        rows = [[m] + [f"{c.rates[m].rate:.3f}" for c in cells] for m in methods]
        if any(c.theory is not None for c in cells):
            rows.append(["theory"] + [f"{c.theory:.3f}" if c.theory is not None else "-" for c in cells])
        rows.append(["mc_se"] + [f"{max(r.mc_stderr for r in c.rates.values()):.3f}" for c in cells])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda row: "  ".join(v.rjust(w) if i else v.ljust(w) for i, (v, w) in enumerate(zip(row, widths)))
    lines.append(fmt(header))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt(r) for r in rows)
    lines.append(f"# runtime {result.runtime:.1f}s")
    return "\n".join(lines) + "\n"


def null_statistics_csv(result):
    lines = ["cell,p,n,n2,index,t_stat,chi2_stat"]
    for c in result.cells:
        cfg = c.config
        chi2 = c.chi2_stats if c.chi2_stats is not None else [None] * len(c.t_stats)
        n2 = "" if cfg.n2 is None else str(cfg.n2)
        for i, (t, q) in enumerate(zip(c.t_stats, chi2)):
            q_text = "" if q is None else repr(float(q))
            lines.append(f"{cfg.cell},{cfg.p},{cfg.n},{n2},{i},{float(t)!r},{q_text}")
    return "\n".join(lines) + "\n"


def write_outputs(result, outdir):
    """Write results.json, results.txt and (histogram scenarios) null_statistics.csv."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"json": outdir / "results.json", "table": outdir / "results.txt"}
    paths["json"].write_text(result_json(result))
    paths["table"].write_text(format_table(result))
    if isinstance(result.cells[0], NullStatistics):
        paths["csv"] = outdir / "null_statistics.csv"
        paths["csv"].write_text(null_statistics_csv(result))
    return paths
