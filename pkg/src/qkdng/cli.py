"""``ng`` command line: run an experiment and write its CSV (and PGM) output.

Exit codes: 0 on success, 2 on configuration errors, 3 when ``--strict`` is
given and any row carries a numerical warning.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .constellation import SHAPES, make_constellation
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, parse_float, render_csv, run

log = logging.getLogger("qkdng")


def _floats(text: str) -> list[float]:
    try:
        return [parse_float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


_HELP = {
    "fig2a": "constellation non-Gaussianity against size (GH and RW shaping)",
    "fig2b": "non-Gaussianity before and after a thermal-loss channel of fixed transmittance",
    "fig3a": "non-Gaussianity of thermal-loss outputs against distance",
    "fig3b": "non-Gaussianity of thermal-loss outputs against modulation variance",
    "fig5": "non-Gaussianity of dephased constellations",
    "regions": "MAP decision regions for uniform and shaped QAM",
    "sweep": "full report (non-Gaussianity, capacity gap, Gaussian key rate) over a channel grid",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ng", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
        p.add_argument("--shape", choices=SHAPES + ("both",))
        p.add_argument("--m", dest="m_list", type=_ints, help="per-axis sizes, e.g. 2,4,8")
        p.add_argument("--vm", dest="V_m", type=float, help="modulation variance")
        p.add_argument("--vm-list", type=_floats, help="modulation variances for fig3b")
        link = p.add_mutually_exclusive_group()
        link.add_argument("--tau", type=_floats, help="transmittance value(s)")
        link.add_argument("--dist-km", dest="distance_km", type=_floats, help="distances in km")
        p.add_argument("--attenuation", type=float, help="tau = 10^(-attenuation * d_km), default 0.01")
        p.add_argument("--nbar", type=float, help="thermal photons of the channel")
        p.add_argument("--nbar-list", type=_floats, help="thermal photon values for fig2b")
        p.add_argument("--gamma", type=_floats, help="dephasing values (inf allowed) for fig5")
        p.add_argument("--tail-tol", type=float)
        p.add_argument("--nodes", dest="quadrature_nodes", type=int, help="starting Gauss-Hermite nodes")
        p.add_argument("--noise-var", type=float, help="AWGN variance for regions")
        p.add_argument("--extent", type=float, help="half-width of the regions grid")
        p.add_argument("--resolution", type=int, help="grid points per axis for regions")
        p.add_argument("--beta", type=float, help="reconciliation efficiency for sweep")
        p.add_argument("--jobs", type=int, help="worker threads")
        p.add_argument("-o", "--output", dest="output_path", help="CSV path, '-' for stdout")
        p.add_argument("--strict", action="store_true", help="exit 3 if any row carries a warning")

    c = sub.add_parser("constellation", help="write a constellation as JSON")
    c.add_argument("--shape", choices=SHAPES, default="gh")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--vm", type=float, default=2.5)
    c.add_argument("-o", "--output", default="-")
    return parser


_OVERRIDES = ("shape", "m_list", "V_m", "vm_list", "tau", "distance_km", "attenuation", "nbar", "nbar_list",
              "gamma", "tail_tol", "quadrature_nodes", "noise_var", "extent", "resolution", "beta", "jobs",
              "output_path")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig(args.command)
    if cfg.experiment != args.command:
        raise ConfigError(f"config file is for {cfg.experiment!r}, not {args.command!r}")
    updates = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k) is not None}
    if "distance_km" in updates:
        updates["tau"] = None
    elif "tau" in updates:
        updates["distance_km"] = None
    return replace(cfg, **updates).resolved()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "constellation":
        try:
            c = make_constellation(args.shape, args.m, args.vm)
        except ValueError as exc:
            log.error("%s", exc)
            return 2
        _write(args.output, json.dumps(c.to_dict(), indent=2) + "\n")
        return 0

    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        log.error("configuration error: %s", exc)
        return 2

    table = run(cfg)
    _write(cfg.output_path, render_csv(cfg, table))
    if table.extra_files:
        stem = "regions" if cfg.output_path == "-" else str(Path(cfg.output_path).with_suffix(""))
        for suffix, blob in table.extra_files.items():
            Path(f"{stem}_{suffix}").write_bytes(blob)
    if table.warnings:
        log.warning("%d row(s) carry numerical warnings", len(table.warnings))
        if args.strict:
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
