"""Command-line front end.

Commands:
  validate  parse and check a config, no simulation
  run       simulate one configuration
  compare   run several duplex modes on identical drops, report gains vs FDD
  sweep     compare modes over a list of offered loads (bursty traffic)
  fig1      interference-ratio CDFs of a drop (nulling forced off by default)

All outputs are plain CSV plus a human-readable summary.txt in --out. Exit
codes: 0 success, 1 configuration error, 2 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import engine
from .config import BUNDLED, bundled_config_path, flatten, load_config
from .errors import ConfigError, InvariantError
from .radio import DuplexMode
from .traffic import percentile


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a YAML run config")
    p.add_argument("--scenario", choices=BUNDLED,
                   help="use a bundled scenario config instead of --config")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="process pool size for drops (default: CPU count)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdsim",
                                 description="Full-duplex small-cell system-level simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, desc in (("validate", "check a config file"),
                       ("run", "simulate one configuration"),
                       ("compare", "compare duplex modes against FDD"),
                       ("sweep", "compare modes across offered loads"),
                       ("fig1", "interference ratio CDFs")):
        p = sub.add_parser(name, help=desc)
        _add_common(p)
        if name in ("compare", "sweep"):
            p.add_argument("--modes", default="fd,fdd",
                           help="comma list of duplex modes (default: fd,fdd)")
        if name == "sweep":
            p.add_argument("--loads", required=True,
                           help="comma list of DL offered loads in bps (UL follows 2:1)")
    return ap


def _load(args) -> tuple:
    if args.config and args.scenario:
        raise ConfigError("give either --config or --scenario, not both")
    if args.config:
        path = args.config
    elif args.scenario:
        path = bundled_config_path(args.scenario)
    else:
        raise ConfigError("a config is required: --config PATH or --scenario NAME")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.command == "fig1":
        # fig1 characterizes the raw BS-BS dominance, so nulling defaults to
        # off; explicit --set flags still win.
        overrides = [f"nulling.tx_null_db=0.0", f"nulling.rx_null_db=0.0"] + overrides
    cfg, raw = load_config(path, overrides)
    return cfg, raw


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")


def _cdf_rows(values: np.ndarray):
    v = np.sort(np.asarray(values, dtype=float))
    return [(f"{x:.6g}", f"{(i + 1) / len(v):.6f}") for i, x in enumerate(v)]


def _tput_percentiles(values) -> str:
    if len(values) == 0:
        return "n/a"
    return (f"p5={percentile(values, 5) / 1e6:.3f} p50={percentile(values, 50) / 1e6:.3f} "
            f"p95={percentile(values, 95) / 1e6:.3f} mean={np.mean(values) / 1e6:.3f} Mbps")


def _summary_header(raw: dict, warnings: list) -> list:
    lines = ["# config"]
    lines += [f"  {line}" for line in flatten(raw)]
    if warnings:
        lines.append("# warnings")
        lines += [f"  {w}" for w in warnings]
    return lines


def _emit_run_outputs(out_dir: str, result: engine.RunResult, lines: list) -> None:
    bursty = result.cfg.traffic.model == "ftp3"
    for direction in ("dl", "ul"):
        tput = result.throughput_bps(direction)
        if len(tput):
            _write_csv(os.path.join(out_dir, f"throughput_cdf_{direction}.csv"),
                       "throughput_bps,cum_prob", _cdf_rows(tput))
        lines.append(f"{direction.upper()} per-UE throughput: {_tput_percentiles(tput)}")
        if bursty:
            stats = result.perceived(direction)
            vals = np.array(list(stats.per_ue_mean_bps.values()))
            if len(vals):
                _write_csv(os.path.join(out_dir, f"perceived_tput_{direction}.csv"),
                           "perceived_bps,cum_prob", _cdf_rows(vals))
            lines.append(f"{direction.upper()} perceived (per UE): {_tput_percentiles(vals)} "
                         f"[completed={stats.n_completed} unfinished={stats.n_unfinished} "
                         f"lossy={stats.n_lossy}]")


def cmd_run(args) -> int:
    cfg, raw = _load(args)
    result = engine.run(cfg, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    lines = _summary_header(raw, result.warnings)
    lines.append(f"# run mode={cfg.mode.value} scheduler={cfg.scheduler} "
                 f"drops={cfg.n_drops} ttis={cfg.ttis_per_drop}")
    if result.drops and result.drops[0].boost_db:
        lines.append(f"uplink boost: {result.drops[0].boost_db:.1f} dB")
    _emit_run_outputs(args.out, result, lines)
    _finish(args.out, lines)
    return 0


def cmd_compare(args) -> int:
    cfg, raw = _load(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    report = engine.compare_modes(cfg, modes, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    bursty = cfg.traffic.model == "ftp3"
    stats = ("mean", "p5", "p50", "p95") if bursty else ("mean",)
    rows = []
    for mode in report.metrics:
        for direction in ("dl", "ul"):
            for stat in stats:
                rows.append((mode, direction, stat,
                             f"{report.gain(mode, direction, stat):.4f}"))
    _write_csv(os.path.join(args.out, "gains.csv"), "mode,direction,stat,gain_vs_fdd", rows)
    lines = _summary_header(raw, report.warnings)
    lines.append("# gains vs FDD")
    for mode, met in report.metrics.items():
        lines.append(f"mode={mode} scheduler={met.scheduler} boost={met.boost_db:.1f} dB: "
                     f"DL gain {report.gain(mode, 'dl'):.3f}, UL gain {report.gain(mode, 'ul'):.3f}")
        result = report.results[mode]
        _emit_run_outputs_mode(args.out, result, mode, bursty)
    _finish(args.out, lines)
    return 0


def _emit_run_outputs_mode(out_dir: str, result: engine.RunResult, mode: str,
                           bursty: bool) -> None:
    for direction in ("dl", "ul"):
        tput = result.throughput_bps(direction)
        if len(tput):
            _write_csv(os.path.join(out_dir, f"throughput_cdf_{direction}_{mode}.csv"),
                       "throughput_bps,cum_prob", _cdf_rows(tput))
        if bursty:
            stats = result.perceived(direction)
            vals = np.array(list(stats.per_ue_mean_bps.values()))
            if len(vals):
                _write_csv(os.path.join(out_dir, f"perceived_tput_{direction}_{mode}.csv"),
                           "perceived_bps,cum_prob", _cdf_rows(vals))


def cmd_sweep(args) -> int:
    cfg, raw = _load(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    loads = [float(x) for x in args.loads.split(",") if x.strip()]
    table = engine.load_sweep(cfg, loads, modes, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    warnings: list = []
    for load, report in table:
        warnings += report.warnings
        for mode in report.metrics:
            for direction in ("dl", "ul"):
                for stat in ("mean", "p5", "p50", "p95"):
                    rows.append((f"{load:.6g}", mode, direction, stat,
                                 f"{report.gain(mode, direction, stat):.4f}"))
    _write_csv(os.path.join(args.out, "gains.csv"),
               "dl_load_bps,mode,direction,stat,gain_vs_fdd", rows)
    lines = _summary_header(raw, warnings)
    lines.append("# perceived-throughput gains vs FDD by load")
    for load, report in table:
        for mode in report.metrics:
            lines.append(f"load={load / 1e6:.1f} Mbps mode={mode}: "
                         f"DL mean gain {report.gain(mode, 'dl'):.3f}, "
                         f"UL mean gain {report.gain(mode, 'ul'):.3f}")
    _finish(args.out, lines)
    return 0


def cmd_fig1(args) -> int:
    cfg, raw = _load(args)
    cdfs = engine.fig_interference_ratios(cfg)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for series in ("bsbs_over_ul", "ueue_over_dl"):
        vals, probs = cdfs[series]
        rows += [(series, f"{v:.4f}", f"{p:.6f}") for v, p in zip(vals, probs)]
    _write_csv(os.path.join(args.out, "fig1_cdf.csv"), "series,value_db,cum_prob", rows)
    lines = _summary_header(raw, [])
    lines.append(f"median BS-BS over conventional UL interference: "
                 f"{cdfs['median_bsbs_over_ul_db']:.2f} dB")
    lines.append(f"median UE-UE over conventional DL interference: "
                 f"{cdfs['median_ueue_over_dl_db']:.2f} dB")
    _finish(args.out, lines)
    return 0


def cmd_validate(args) -> int:
    cfg, _ = _load(args)
    engine.validate_config(cfg)
    print(f"config ok: scenario={cfg.scenario.kind} mode={cfg.mode.value} "
          f"scheduler={cfg.scheduler}")
    return 0


def _finish(out_dir: str, lines: list) -> None:
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, "summary.txt"), "w") as f:
        f.write(text)
    print(text, end="")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep,
                "fig1": cmd_fig1, "validate": cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except InvariantError as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
