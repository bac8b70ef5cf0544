"""Figure reproductions and parameter sweeps emitted as CSV.

Each experiment expands its config into an ordered list of independent row
tasks. Tasks may run on a thread pool; rows are always written in task order,
so the output does not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np

from . import __version__
from .channels import (
    ChannelParams,
    PhaseDiffusionParams,
    constellation_state,
    phase_diffusion,
    thermal_loss_output,
)
from .classical import QUADRATURE_NODES, map_regions
from .constellation import MAX_AXIS_POINTS, SHAPES, Constellation, Distribution1D, make_constellation, qam_product
from .entropy import LOG_BASE, delta_vn, delta_vn_constellation
from .fock import TAIL_TOL
from .skr import epsilon_g_bound, gaussian_dw_rate

EXPERIMENTS = ("fig2a", "fig2b", "fig3a", "fig3b", "fig5", "regions", "sweep")

_DEFAULTS = {
    "fig2a": {"m_list": list(range(2, 33)), "shape": "both"},
    "fig2b": {"m_list": list(range(2, 33)), "shape": "gh", "tau": [0.5], "nbar_list": [0.0, 0.2, 0.4]},
    "fig3a": {"m_list": [4, 8, 16, 32], "shape": "both", "distance_km": [float(d) for d in range(0, 155, 5)]},
    "fig3b": {
        "m_list": [4, 8, 16, 32],
        "shape": "both",
        "distance_km": [50.0],
        "vm_list": [round(0.25 * k, 2) for k in range(1, 21)],
    },
    "fig5": {"m_list": list(range(1, 33)), "shape": "gh", "gamma": [0.15, math.inf]},
    "regions": {"m_list": [4], "shape": "gh"},
    "sweep": {"m_list": [4, 8, 16], "shape": "both", "distance_km": [0.0, 25.0, 50.0, 100.0]},
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    experiment: str
    shape: str | None = None
    m_list: list[int] | None = None
    V_m: float = 2.5
    vm_list: list[float] | None = None
    tau: list[float] | None = None
    distance_km: list[float] | None = None
    attenuation: float = 0.01
    nbar: float = 0.1
    nbar_list: list[float] | None = None
    gamma: list[float] | None = None
    tail_tol: float = TAIL_TOL
    quadrature_nodes: int = QUADRATURE_NODES
    noise_var: float = 1.0
    extent: float | None = None
    resolution: int = 201
    beta: float = 1.0
    output_path: str = "-"
    jobs: int = field(default=1, metadata={"hashed": False})

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "gamma" in data and data["gamma"] is not None:
            data["gamma"] = [parse_float(g) for g in data["gamma"]]
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def resolved(self) -> "ExperimentConfig":
        """Copy with experiment defaults filled in and every field validated."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        updates = {k: v for k, v in _DEFAULTS[self.experiment].items() if getattr(self, k) is None}
        cfg = replace(self, **updates)
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        if self.shape not in SHAPES + ("both",):
            raise ConfigError(f"shape must be gh, rw or both, got {self.shape!r}")
        if not self.m_list or any(not 1 <= int(m) <= MAX_AXIS_POINTS for m in self.m_list):
            raise ConfigError(f"m_list entries must lie in [1, {MAX_AXIS_POINTS}]")
        if not self.V_m > 0 or any(v <= 0 for v in self.vm_list or []):
            raise ConfigError("modulation variances must be positive")
        if any(not 0 < t <= 1 for t in self.tau or []):
            raise ConfigError("tau values must lie in (0, 1]")
        if any(d < 0 for d in self.distance_km or []) or self.attenuation < 0:
            raise ConfigError("distances and attenuation must be non-negative")
        if self.nbar < 0 or any(n < 0 for n in self.nbar_list or []):
            raise ConfigError("nbar must be non-negative")
        if any(not g >= 0 for g in self.gamma or []):
            raise ConfigError("gamma values must be >= 0 or inf")
        if not 0 < self.tail_tol < 1:
            raise ConfigError("tail_tol must lie in (0, 1)")
        if self.quadrature_nodes < 2 or self.resolution < 2 or self.jobs < 1:
            raise ConfigError("quadrature_nodes, resolution and jobs must be positive")
        if self.noise_var <= 0 or not 0 < self.beta <= 1:
            raise ConfigError("noise_var must be positive and beta in (0, 1]")

    def shapes(self) -> tuple[str, ...]:
        return SHAPES if self.shape == "both" else (self.shape,)

    def hash(self) -> str:
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.metadata.get("hashed", True)}
        data.pop("output_path")
        blob = json.dumps(data, sort_keys=True, default=format_value)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def parse_float(text) -> float:
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    return float(text)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


@dataclass
class Table:
    columns: list[str]
    rows: list[dict]
    extra_files: dict[str, bytes] = field(default_factory=dict)

    @property
    def warnings(self) -> list[str]:
        return [r["warnings"] for r in self.rows if r.get("warnings")]


def _run_tasks(tasks: list[Callable[[], dict]], jobs: int) -> list[dict]:
    if jobs == 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


def _constellations(cfg: ExperimentConfig, V_m: float | None = None):
    for shape in cfg.shapes():
        for m in cfg.m_list:
            yield shape, int(m), make_constellation(shape, int(m), cfg.V_m if V_m is None else V_m)


def _distances(cfg: ExperimentConfig) -> list[tuple[float | None, ChannelParams]]:
    if cfg.tau:
        return [(None, ChannelParams(t, cfg.nbar)) for t in cfg.tau]
    return [(d, ChannelParams.from_distance(d, cfg.nbar, cfg.attenuation)) for d in cfg.distance_km]


def run_fig2a(cfg: ExperimentConfig) -> Table:
    """Constellation non-Gaussianity against size for each shaping family."""

    def row(shape, m, c):
        return {"shape": shape, "m": m, "N": c.size, "V_m": c.variance, "method": "gram",
                "delta_vn": delta_vn_constellation(c), "n_max": None, "warnings": ""}

    tasks = [lambda a=args: row(*a) for args in _constellations(cfg)]
    return Table(["shape", "m", "N", "V_m", "method", "delta_vn", "n_max", "warnings"], _run_tasks(tasks, cfg.jobs))


def run_fig2b(cfg: ExperimentConfig) -> Table:
    """Non-Gaussianity before and after a thermal-loss channel of fixed transmittance."""
    tau = cfg.tau[0]

    def input_row(shape, m, c):
        return {"shape": shape, "m": m, "N": c.size, "tau": tau, "nbar_label": "input", "method": "gram",
                "delta_vn": delta_vn_constellation(c), "n_max": None, "warnings": ""}

    def output_row(shape, m, c, nbar):
        out = thermal_loss_output(c, ChannelParams(tau, nbar), tail_tol=cfg.tail_tol)
        return {"shape": shape, "m": m, "N": c.size, "tau": tau, "nbar_label": format_value(nbar),
                "method": "fock", "delta_vn": delta_vn(out), "n_max": out.n_max, "warnings": "; ".join(out.flags)}

    tasks = []
    for args in _constellations(cfg):
        tasks.append(lambda a=args: input_row(*a))
        for nbar in cfg.nbar_list:
            tasks.append(lambda a=args, n=nbar: output_row(*a, n))
    cols = ["shape", "m", "N", "tau", "nbar_label", "method", "delta_vn", "n_max", "warnings"]
    return Table(cols, _run_tasks(tasks, cfg.jobs))


_FIG3_COLS = ["shape", "m", "N", "d_km", "tau", "nbar", "V_m", "delta_vn", "capacity_gap",
              "epsilon_g_upper", "snr", "n_max", "warnings"]


def _fig3_row(shape, m, c, d_km, p, cfg):
    rep = epsilon_g_bound(c, p, cfg.tail_tol, cfg.quadrature_nodes)
    return {"shape": shape, "m": m, "N": c.size, "d_km": d_km, "tau": p.tau, "nbar": p.nbar, "V_m": c.variance,
            "delta_vn": rep.delta_vn_out, "capacity_gap": rep.capacity_gap, "epsilon_g_upper": rep.epsilon_g_upper,
            "snr": rep.snr_used, "n_max": rep.n_max_used, "warnings": "; ".join(rep.warnings)}


def run_fig3a(cfg: ExperimentConfig) -> Table:
    """Output non-Gaussianity and capacity gap along a fibre-distance sweep."""
    tasks = [
        lambda a=args, d=d, p=p: _fig3_row(*a, d, p, cfg)
        for args in _constellations(cfg)
        for d, p in _distances(cfg)
    ]
    return Table(_FIG3_COLS, _run_tasks(tasks, cfg.jobs))


def run_fig3b(cfg: ExperimentConfig) -> Table:
    """Output non-Gaussianity against modulation variance at fixed distance."""
    tasks = [
        lambda a=args, d=d, p=p: _fig3_row(*a, d, p, cfg)
        for vm in cfg.vm_list
        for args in _constellations(cfg, vm)
        for d, p in _distances(cfg)
    ]
    return Table(_FIG3_COLS, _run_tasks(tasks, cfg.jobs))


def run_fig3(cfg: ExperimentConfig) -> Table:
    return run_fig3b(cfg) if cfg.experiment == "fig3b" else run_fig3a(cfg)


def run_fig5(cfg: ExperimentConfig) -> Table:
    """Non-Gaussianity of dephased constellations; gamma is used as the dephasing Delta."""

    def input_row(shape, m, c):
        return {"shape": shape, "m": m, "N": c.size, "gamma_label": "input", "method": "gram",
                "delta_vn": delta_vn_constellation(c), "n_max": None, "warnings": ""}

    def diffused_row(shape, m, c, gamma):
        rho = constellation_state(c, tail_tol=cfg.tail_tol)
        out = phase_diffusion(rho, PhaseDiffusionParams(gamma))
        return {"shape": shape, "m": m, "N": c.size, "gamma_label": format_value(gamma), "method": "fock",
                "delta_vn": delta_vn(out), "n_max": out.n_max, "warnings": "; ".join(out.flags)}

    tasks = []
    for args in _constellations(cfg):
        tasks.append(lambda a=args: input_row(*a))
        for g in cfg.gamma:
            tasks.append(lambda a=args, g=g: diffused_row(*a, g))
    return Table(["shape", "m", "N", "gamma_label", "method", "delta_vn", "n_max", "warnings"],
                 _run_tasks(tasks, cfg.jobs))


def uniform_qam(m: int, V_m: float) -> Constellation:
    """Equiprobable square QAM with ``m`` evenly spaced levels per axis."""
    points = np.arange(m) - (m - 1) / 2.0
    return qam_product(Distribution1D(points, np.full(m, 1.0 / m)), V_m, "uniform")


def run_regions(cfg: ExperimentConfig) -> Table:
    """MAP decision regions for equiprobable and shaped QAM at the configured noise."""
    m = int(cfg.m_list[0])
    shaped = make_constellation(cfg.shapes()[0], m, cfg.V_m)
    uniform = uniform_qam(m, cfg.V_m)
    extent = cfg.extent or 1.5 * float(np.max(np.abs(uniform.amplitudes.real)))
    rows, extra = [], {}
    for label, c in (("uniform", uniform), (shaped.shape, shaped)):
        grid = map_regions(c, cfg.noise_var, extent, cfg.resolution)
        for i, y in enumerate(grid.axis):
            for j, x in enumerate(grid.axis):
                rows.append({"prior": label, "x": x, "y": y, "label": int(grid.labels[i, j])})
        extra[f"{label}.pgm"] = grid.pgm_bytes()
    return Table(["prior", "x", "y", "label"], rows, extra)


def run_sweep(cfg: ExperimentConfig) -> Table:
    """Full report (non-Gaussianity, capacity gap, Gaussian key rate) over a channel grid."""

    def row(shape, m, c, d_km, p):
        r = _fig3_row(shape, m, c, d_km, p, cfg)
        r["delta_vn_in"] = delta_vn_constellation(c)
        r["gaussian_dw_rate"] = gaussian_dw_rate(c.variance, p, cfg.beta) if c.variance > 0 else 0.0
        return r

    tasks = [
        lambda a=args, d=d, p=p: row(*a, d, p)
        for args in _constellations(cfg)
        for d, p in _distances(cfg)
    ]
    cols = _FIG3_COLS[:7] + ["delta_vn_in"] + _FIG3_COLS[7:-2] + ["gaussian_dw_rate"] + _FIG3_COLS[-2:]
    return Table(cols, _run_tasks(tasks, cfg.jobs))


RUNNERS = {
    "fig2a": run_fig2a,
    "fig2b": run_fig2b,
    "fig3a": run_fig3,
    "fig3b": run_fig3,
    "fig5": run_fig5,
    "regions": run_regions,
    "sweep": run_sweep,
}


def run(cfg: ExperimentConfig) -> Table:
    cfg = cfg.resolved()
    return RUNNERS[cfg.experiment](cfg)


def render_csv(cfg: ExperimentConfig, table: Table) -> str:
    """CSV text: ``#`` metadata lines, a header row, then one line per row (CRLF endings)."""
    cfg = cfg.resolved()
    meta = [
        f"qkdng_version={__version__}",
        f"experiment={cfg.experiment}",
        f"config_hash={cfg.hash()}",
        f"tail_tol={format_value(cfg.tail_tol)}",
        f"log_base={LOG_BASE}",
    ]
    if cfg.experiment == "fig5":
        meta.append("gamma_convention=gamma is the dephasing Delta in exp(-Delta^2 (n-m)^2)")
    if cfg.experiment in ("fig3a", "fig3b", "sweep") and not cfg.tau:
        meta.append(f"distance_convention=tau=10^(-{format_value(cfg.attenuation)}*d_km)")
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\r\n")
    writer = csv.writer(buf)
    writer.writerow(table.columns)
    for r in table.rows:
        writer.writerow([format_value(r.get(c)) for c in table.columns])
    return buf.getvalue()

