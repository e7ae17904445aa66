"""
Command-line interface for sk-descent.

Subcommands:
    run            run a measurement campaign and write CSV/JSON results
    fit            re-fit scaling exponents from existing results
    oracle         exact ground state of a small instance
    sample-depth   raw draws of the move-depth sampler
    history        campaigns recorded with `run --record`
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import Config
from .database import CampaignRepository
from .dynamics import sample_depth
from .errors import InvalidArgumentError, UsageError
from .experiment import (
    EnergyStats,
    ExperimentConfig,
    Protocol,
    ScalingFit,
    best_lambda_by_size,
    fit_all,
    run_campaign,
)
from .oracle import brute_force_ground_state
from .results_io import RunManifest, emit_results, load_config_file, read_results, write_fits_csv
from .sk_model import generate_couplings

logger = logging.getLogger(__name__)

# Human-facing output goes to stderr; stdout is reserved for data.
console = Console(stderr=True)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

CONFIG_FIELDS = set(ExperimentConfig().to_dict())


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


# ============================================================
# ARGUMENT PARSING
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="sk-descent",
        description="Lambda-interpolated greedy/reluctant descent on the SK spin glass.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a measurement campaign")
    run.add_argument("--config", help="JSON config file (or a JSON results file to replay)")
    run.add_argument("--protocol", choices=[p.value for p in Protocol])
    run.add_argument("--sizes", help="comma-separated system sizes, e.g. 25,50,100")
    run.add_argument("--lambdas", help="comma-separated lambda values, e.g. 1,10,100")
    run.add_argument("--nreal", help="disorder realizations per cell")
    run.add_argument("--starts", help="restarts per realization (integer, or N for the system size)")
    run.add_argument("--budget-flips", dest="budget_flips", help="flip budget per realization (fixed-budget)")
    run.add_argument("--budget-seconds", dest="budget_seconds",
                     help="wall-clock budget per realization (fixed-budget, not reproducible)")
    run.add_argument("--max-flips", dest="max_flips", help="flip cap per trajectory (default 100*N^2)")
    run.add_argument("--seed", help="master seed")
    run.add_argument("--exclude-sizes", dest="exclude_sizes", help="sizes left out of the scaling fits")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument("--out", help="output path, '-' for stdout (default: under SKDESCENT_OUTPUT_DIR)")
    run.add_argument("--workers", type=int, help="worker processes (default: SKDESCENT_WORKERS)")
    run.add_argument("--record", action="store_true", help="store the campaign in the results database")
    run.add_argument("--label", default="", help="label stored with --record")
    run.add_argument("--print-config", dest="print_config", action="store_true",
                     help="print the merged config as JSON and exit")

    fit = sub.add_parser("fit", help="re-fit scaling exponents from existing results")
    fit.add_argument("results", nargs="?", help="results CSV or JSON file")
    fit.add_argument("--campaign", help="recorded campaign ID (see `history`)")
    fit.add_argument("--exclude-sizes", dest="exclude_sizes", default="", help="sizes left out of the fits")
    fit.add_argument("--lambdas", help="only fit these lambdas")
    fit.add_argument("--out", help="write the fit table as CSV ('-' for stdout)")

    oracle = sub.add_parser("oracle", help="brute-force ground state of a small instance")
    oracle.add_argument("--n", type=int, required=True, help="system size (at most 24)")
    oracle.add_argument("--seed", type=int, required=True, help="instance seed")
    oracle.add_argument("--count-stable", dest="count_stable", action="store_true",
                        help="also count 1-spin-flip stable configurations")
    oracle.add_argument("--json", action="store_true", help="print the result as JSON on stdout")

    depth = sub.add_parser("sample-depth", help="emit draws of the move-depth sampler")
    depth.add_argument("--lambda", dest="lam", type=float, required=True)
    depth.add_argument("--count", type=int, default=1000)
    depth.add_argument("--seed", type=int, default=0)
    depth.add_argument("--out", help="output path (default stdout)")

    history = sub.add_parser("history", help="list recorded campaigns")
    history.add_argument("--show", help="print the cells of one campaign")

    return parser


def parse_config(argv: Sequence[str]) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig from `run ...` arguments.
    Defaults < config file < command-line flags.
    """
    args = build_parser().parse_args(list(argv))
    if args.command != "run":
        raise UsageError("only the run command takes a campaign configuration", field="command")
    return config_from_args(args)


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    merged = ExperimentConfig().to_dict()

    if args.config:
        try:
            from_file = load_config_file(args.config)
        except (OSError, ValueError) as e:
            raise UsageError(str(e), field="config")
        unknown = sorted(set(from_file) - CONFIG_FIELDS)
        if unknown:
            raise UsageError(f"unknown keys {unknown}", field="config")
        merged.update(from_file)

    flags = {
        "protocol": args.protocol,
        "sizes": _parse_list(args.sizes, int, "sizes"),
        "lambdas": _parse_list(args.lambdas, float, "lambdas"),
        "nreal": _parse_number(args.nreal, int, "nreal"),
        "starts_per_realization": _parse_starts(args.starts),
        "flip_budget": _parse_number(args.budget_flips, int, "budget-flips"),
        "budget_seconds": _parse_number(args.budget_seconds, float, "budget-seconds"),
        "max_flips": _parse_number(args.max_flips, int, "max-flips"),
        "master_seed": _parse_number(args.seed, int, "seed"),
        "exclude_sizes_from_fit": _parse_list(args.exclude_sizes, int, "exclude-sizes"),
    }
    merged.update({key: value for key, value in flags.items() if value is not None})

    try:
        return ExperimentConfig.from_dict(merged).validate()
    except (InvalidArgumentError, ValueError, TypeError) as e:
        raise UsageError(str(e))


def _parse_list(raw: Optional[str], kind, name: str) -> Optional[list]:
    if raw is None:
        return None
    try:
        return [kind(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list, got {raw!r}", field=name)


def _parse_number(raw: Optional[str], kind, name: str):
    if raw is None:
        return None
    try:
        return kind(raw)
    except ValueError:
        raise UsageError(f"expected a number, got {raw!r}", field=name)


def _parse_starts(raw: Optional[str]):
    if raw is None:
        return None
    if raw.strip().upper() == "N":
        return "N"
    return _parse_number(raw, int, "starts")


# ============================================================
# COMMANDS
# ============================================================

def cmd_run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.print_config:
        print(json.dumps(config.to_dict(), indent=2))
        return EXIT_OK

    try:
        workers = args.workers if args.workers is not None else Config.workers()
    except ValueError as e:
        raise UsageError(str(e), field="workers")
    if workers < 1:
        raise UsageError(f"must be >= 1, got {workers}", field="workers")

    manifest = RunManifest(config_echo=config)
    result = run_campaign(config, workers=workers)
    manifest.finish(result.warnings)

    if not result.stats:
        console.print("[red]❌ Every campaign cell failed; nothing to write.[/red]")
        for warning in result.warnings:
            console.print(f"  [yellow]• {warning}[/yellow]")
        return EXIT_FAILURE

    destination = args.out or _default_output(config, args.format)
    emit_results(result, manifest, args.format, destination)

    print_cells(result.stats)
    if result.fits:
        print_fits(result.fits)
    if config.protocol is Protocol.FIXED_BUDGET:
        for n, lam in best_lambda_by_size(result.stats).items():
            console.print(f"[cyan]Lowest H_N at N={n}: lambda={lam:g}[/cyan]")
    for warning in result.warnings:
        console.print(f"[yellow]⚠️ {warning}[/yellow]")

    if args.record:
        repo = CampaignRepository(Config.database_path())
        record = repo.save_campaign(manifest.to_dict(), result.stats, result.fits, label=args.label)
        console.print(f"[green]✅ Recorded campaign {record.id[:8]}[/green]")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    if bool(args.results) == bool(args.campaign):
        raise UsageError("give either a results file or --campaign", field="results")

    if args.campaign:
        repo = CampaignRepository(Config.database_path())
        record = repo.get_campaign(args.campaign)
        if record is None:
            raise UsageError(f"no unique campaign matches {args.campaign!r}", field="campaign")
        cells = repo.get_cells(record.id)
    else:
        cells, _, _ = read_results(args.results)

    lambdas = _parse_list(args.lambdas, float, "lambdas")
    if lambdas:
        cells = [c for c in cells if c.lam in lambdas]
    exclude = _parse_list(args.exclude_sizes, int, "exclude-sizes") or []

    fits, warnings = fit_all(cells, exclude)
    for warning in warnings:
        console.print(f"[yellow]⚠️ {warning}[/yellow]")
    if not fits:
        console.print("[red]❌ No lambda had enough points for a fit.[/red]")
        return EXIT_FAILURE

    print_fits(fits)
    if args.out:
        write_fits_csv(fits, args.out)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        J = generate_couplings(args.n, args.seed)
        truth = brute_force_ground_state(J, count_stable=args.count_stable)
    except InvalidArgumentError as e:
        raise UsageError(str(e))

    if args.json:
        print(json.dumps({"n": args.n, "seed": args.seed, **truth.to_dict()}, indent=2))
        return EXIT_OK

    table = Table(title=f"Ground state, N={args.n}, seed={args.seed}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("E/N", f"{truth.energy_per_spin:.12f}")
    table.add_row("minimizers (up to global flip)", str(len(truth.argmin_configs)))
    if truth.n_stable_states is not None:
        table.add_row("1-spin-flip stable states", str(truth.n_stable_states))
    console.print(table)
    for config in truth.argmin_configs:
        console.print("".join("+" if s > 0 else "-" for s in config))
    return EXIT_OK


def cmd_sample_depth(args: argparse.Namespace) -> int:
    if args.count < 1:
        raise UsageError(f"must be >= 1, got {args.count}", field="count")
    try:
        draws = sample_depth(args.lam, np.random.default_rng(args.seed), size=args.count)
    except InvalidArgumentError as e:
        raise UsageError(str(e), field="lambda")

    text = "".join(f"{float(d)!r}\n" for d in draws)
    if args.out and args.out != "-":
        Path(args.out).write_text(text, encoding="utf-8")
        console.print(f"[green]✅ Wrote {args.count} draws to {args.out}[/green]")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_history(args: argparse.Namespace) -> int:
    repo = CampaignRepository(Config.database_path())

    if args.show:
        record = repo.get_campaign(args.show)
        if record is None:
            raise UsageError(f"no unique campaign matches {args.show!r}", field="show")
        console.print(f"[bold cyan]{record.id}[/bold cyan] {record.describe()}")
        print_cells(repo.get_cells(record.id))
        fits = repo.get_fits(record.id)
        if fits:
            print_fits(fits)
        return EXIT_OK

    campaigns = repo.list_campaigns()
    if not campaigns:
        console.print("📭 No recorded campaigns. Use `run --record` to keep one.")
        return EXIT_OK

    table = Table(title="Recorded campaigns")
    table.add_column("id")
    table.add_column("created")
    table.add_column("label")
    table.add_column("summary")
    for record in campaigns:
        table.add_row(record.id[:8], record.created_at.strftime("%Y-%m-%d %H:%M"), record.label, record.describe())
    console.print(table)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "fit": cmd_fit,
    "oracle": cmd_oracle,
    "sample-depth": cmd_sample_depth,
    "history": cmd_history,
}


# ============================================================
# OUTPUT
# ============================================================

def print_cells(stats: List[EnergyStats]):
    table = Table(title="Campaign cells")
    for column in ("N", "lambda", "runs", "tau", "H_N"):
        table.add_column(column, justify="right")
    for s in stats:
        h_n = "undefined" if s.h_n is None else f"{s.h_n:.6f} ± {s.h_n_stderr:.6f}"
        table.add_row(str(s.n), f"{s.lam:g}", str(s.runs), f"{s.tau:.2f} ± {s.tau_stderr:.2f}", h_n)
    console.print(table)


def print_fits(fits: List[ScalingFit]):
    table = Table(title="Scaling fits  tau ~ N^alpha")
    for column in ("lambda", "alpha", "prefactor", "R^2", "sizes used", "excluded"):
        table.add_column(column, justify="right")
    for f in fits:
        table.add_row(
            f"{f.lam:g}", f"{f.exponent:.3f}", f"{f.prefactor:.4g}", f"{f.r_squared:.4f}",
            ",".join(map(str, f.sizes_used)), ",".join(map(str, f.sizes_excluded)) or "-",
        )
    console.print(table)


def _default_output(config: ExperimentConfig, fmt: str) -> Path:
    return Path(Config.OUTPUT_DIR) / f"{config.protocol.value}-seed{config.master_seed}.{fmt}"


def setup_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the CLI application. Returns the process exit status."""
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        setup_logging(args.verbose, args.quiet)
        return COMMANDS[args.command](args)
    except UsageError as e:
        console.print(f"[red]❌ Usage error: {e}[/red]")
        return EXIT_USAGE
    except OSError as e:
        console.print(f"[red]❌ I/O error: {e}[/red]")
        return EXIT_IO
    except Exception as e:
        console.print(f"\n[red]Fatal error: {e}[/red]")
        logger.debug("Traceback", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
