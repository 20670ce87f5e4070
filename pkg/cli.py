"""
Command-line front end for the NDC-OFDM toolkit.

Commands:
- simulate: Monte Carlo BER sweeps from an experiment file or recipe
- analyze: analytical NDC BER curves over the same schema
- se-table: constellation orders at matched spectral efficiency
- channel-gain: LOS gain matrix from a link-geometry file
- show-config: effective defaults after environment overrides

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 results written but some points are low-confidence.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from ndc_ofdm.analysis import analytic_curve, se_table
from ndc_ofdm.channel import gain_matrix, save_matrix
from ndc_ofdm.config import DEFAULT_OUT_DIR, DEFAULT_WORKERS, LOG_FORMAT, LOG_LEVEL, VERSION, get_config
from ndc_ofdm.errors import NUMERICAL_ERRORS, ConfigError, NdcOfdmError
from ndc_ofdm.experiment import Experiment, load_experiment, load_geometry, load_recipe
from ndc_ofdm.montecarlo import run_sweep
from ndc_ofdm.results import BerCurve, RunManifest, atomic_write, config_digest, utc_now, write_curves

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_LOW_CONFIDENCE = 4


def _load(args: argparse.Namespace, required: bool = True) -> Optional[Experiment]:
    if getattr(args, "recipe", None):
        return load_recipe(args.recipe, seed=args.seed)
    if getattr(args, "config", None):
        return load_experiment(args.config, seed=args.seed)
    if required:
        raise ConfigError("Give an experiment file with --config or a bundled recipe with --recipe")
    return None


def _manifest(command: str, experiment: Optional[Experiment], seed: Optional[int]) -> RunManifest:
    payload = {"command": command, "experiment": experiment.raw if experiment else None, "seed": seed}
    return RunManifest(command=command, config_digest=config_digest(payload), seed=seed,
                       version=VERSION, started_at=utc_now())


def _emit(curves: List[BerCurve], out_dir: Path, stem: str, fmt: str, manifest: RunManifest) -> Path:
    path = write_curves(out_dir / f"{stem}.{fmt}", curves, fmt)
    manifest.low_confidence = any(curve.low_confidence for curve in curves)
    manifest.finish([path]).write(out_dir / f"{stem}.manifest.json")
    return path


def display_curves(curves: List[BerCurve]) -> None:
    """Print a fixed-width summary of BER curves."""
    print(f"\n{'='*80}")
    print(f"{'BER RESULTS':^80}")
    print(f"{'='*80}")
    print(f"{'Curve':<44} {'Eb/N0 (dB)':>10} {'Bits':>12} {'BER':>12}")
    print(f"{'-'*80}")
    for curve in curves:
        for point in curve.points:
            flag = " *" if point.low_confidence else ""
            print(f"{curve.label:<44} {point.ebn0_db:>10g} {point.bits:>12d} {point.ber:>12.4e}{flag}")
    print(f"{'-'*80}")
    if any(curve.low_confidence for curve in curves):
        print("* frame cap reached before the error target (low-confidence)")


def cmd_simulate(args: argparse.Namespace) -> int:
    experiment = _load(args)
    if not experiment.sweeps:
        raise ConfigError(f"{experiment.source}: no sweeps to simulate")
    manifest = _manifest("simulate", experiment, experiment.seed)
    logger.info(f"Simulating {len(experiment.sweeps)} sweeps with {args.workers} workers")

    curves = [run_sweep(sweep, workers=args.workers) for sweep in experiment.sweeps]
    path = _emit(curves, Path(args.out_dir), f"{experiment.name}_montecarlo", args.format, manifest)
    display_curves(curves)
    print(f"\nResults written to {path}")
    return EXIT_LOW_CONFIDENCE if manifest.low_confidence else EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    experiment = _load(args)
    plan = experiment.analysis
    if plan is None:
        raise ConfigError(f"{experiment.source}: no analysis section")
    manifest = _manifest("analyze", experiment, experiment.seed)

    curves = []
    print(f"\n{'='*80}")
    print(f"{'ANALYTICAL PIPELINE (' + plan.combination + ')':^80}")
    print(f"{'='*80}")
    print(f"{'Channel':<8} {'M':>5} {'Eb/N0':>7} {'d_c':>10} {'alpha':>9} {'N_bar':>11} {'SNR':>11} {'BER':>11}")
    print(f"{'-'*80}")
    for channel in plan.channels:
        for order in plan.orders:
            curve, details = analytic_curve(channel, order, plan.ebn0_points, plan.N, plan.N_t, plan.sigma_n,
                                            plan.combination)
            curves.append(curve)
            for point in details:
                r = point.result
                print(f"{channel.name:<8} {order:>5d} {point.ebn0_db:>7g} {r.d_c:>10.6f} {r.alpha_bar:>9.5f} "
                      f"{r.n_bar:>11.4e} {r.snr_elec:>11.4e} {point.ber:>11.4e}")
    print(f"{'-'*80}")

    path = _emit(curves, Path(args.out_dir), f"{experiment.name}_analytic", args.format, manifest)
    print(f"\nResults written to {path}")
    return EXIT_OK


def _order_cell(value) -> str:
    return "-" if pd.isna(value) else str(int(value))


def cmd_se_table(args: argparse.Namespace) -> int:
    experiment = _load(args, required=False)
    points = experiment.se_points if experiment else [3.5, 4.0, 4.5, 5.0, 5.5]
    transmitters = experiment.transmitters if experiment else args.transmitters
    manifest = _manifest("se-table", experiment, None)

    table = se_table(points, transmitters)
    print(f"\n{'CONSTELLATION SIZES AT MATCHED SPECTRAL EFFICIENCY':^60}")
    print(f"{'='*60}")
    print(f"{'SE (b/s/Hz)':<14} {'NDC-OFDM':>12} {'DCO-OSM':>12} {'ACO-OSM':>14}")
    print(f"{'-'*60}")
    for row in table.itertuples(index=False):
        print(f"{row.se:<14g} {_order_cell(row.ndc):>12} {_order_cell(row.dco):>12} {_order_cell(row.aco):>14}")
    print(f"{'-'*60}")

    out_dir = Path(args.out_dir)
    stem = experiment.name if experiment else "se_table"
    if args.format == "csv":
        text = table.to_csv(index=False, lineterminator="\n")
    else:
        text = table.to_json(orient="records", indent=2) + "\n"
    path = atomic_write(out_dir / f"{stem}.{args.format}", text)
    manifest.finish([path]).write(out_dir / f"{stem}.manifest.json")
    print(f"\nTable written to {path}")
    return EXIT_OK


def cmd_channel_gain(args: argparse.Namespace) -> int:
    name, links = load_geometry(args.geometry)
    matrix = gain_matrix(links, name=name)
    output = Path(args.output) if args.output else Path(args.out_dir) / f"{name}.txt"
    output = save_matrix(output, matrix)

    print(f"\nGain matrix {name} ({matrix.n_receivers}x{matrix.n_transmitters}):")
    for row in matrix.gains:
        print("  " + " ".join(f"{value:.6e}" for value in row))
    print(f"\nMatrix written to {output}")
    return EXIT_OK


def cmd_show_config(args: argparse.Namespace) -> int:
    """Print the effective defaults after environment overrides."""
    print(json.dumps(get_config(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndc-ofdm",
                                     description="NDC-OFDM optical MIMO simulation and analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level (default: %(default)s)")
    commands = parser.add_subparsers(dest="command", required=True)

    def experiment_options(sub: argparse.ArgumentParser, required: bool = True) -> None:
        source = sub.add_mutually_exclusive_group(required=required)
        source.add_argument("--config", help="Experiment YAML file")
        source.add_argument("--recipe", help="Bundled recipe name (fig2..fig8, table1)")
        sub.add_argument("--seed", type=int, default=None, help="Override the master seed")
        sub.add_argument("--out-dir", default=DEFAULT_OUT_DIR, help="Output directory (default: %(default)s)")
        sub.add_argument("--format", choices=["csv", "json"], default="csv", help="Result format")

    simulate = commands.add_parser("simulate", help="Run Monte Carlo BER sweeps")
    experiment_options(simulate)
    simulate.add_argument("--workers", type=int, default=DEFAULT_WORKERS,
                          help="Frame-level worker threads (default: %(default)s, env NDC_OFDM_WORKERS)")
    simulate.set_defaults(handler=cmd_simulate)

    analyze = commands.add_parser("analyze", help="Compute analytical NDC BER curves")
    experiment_options(analyze)
    analyze.set_defaults(handler=cmd_analyze)

    table = commands.add_parser("se-table", help="Constellation orders at matched spectral efficiency")
    experiment_options(table, required=False)
    table.add_argument("--transmitters", type=int, default=2, help="Number of LEDs without a config")
    table.set_defaults(handler=cmd_se_table)

    gain = commands.add_parser("channel-gain", help="LOS gain matrix from link geometry")
    gain.add_argument("--geometry", required=True, help="Link-geometry YAML file")
    gain.add_argument("--output", help="Matrix file to write (default: <out-dir>/<name>.txt)")
    gain.add_argument("--out-dir", default=DEFAULT_OUT_DIR, help="Output directory (default: %(default)s)")
    gain.set_defaults(handler=cmd_channel_gain)

    show = commands.add_parser("show-config", help="Print defaults after environment overrides")
    show.set_defaults(handler=cmd_show_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper(), format=LOG_FORMAT)

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as e:
        logger.error(f"Numerical error: {e}")
        return EXIT_NUMERICAL
    except NdcOfdmError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
