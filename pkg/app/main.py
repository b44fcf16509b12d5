#!/usr/bin/env python3
"""Command-line entry point: orderdist {census,theory,constants,compare,selftest,gaverage}."""

import argparse
import logging
import sys
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import List, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv

from app.arith import RationalBase
from app.census import CensusSpec, g_average, run_census
from app.characters import character_group, mu_convolution
from app.config import Settings
from app.constants import MIN_PRODUCT_N, a_chi, constant_A, naive_a_chi
from app.densities import (
    average_density_empirical,
    average_density_sum,
    delta_g_mod4,
    delta_g_mod4_from_half,
)
from app.errors import (
    ArgumentError,
    CapacityError,
    ConfigError,
    HypothesisError,
    OrderDistError,
    SpecMismatchError,
    VerificationError,
)
from app.report import (
    ConstantRow,
    census_extras,
    census_meta,
    census_table,
    compare,
    compare_summary,
    compare_table,
    constants_table,
    format_fixed,
    format_radius,
    read_table,
    render,
    theory_table,
    write_output,
)
from app.selftest import run_selftest

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_VERIFICATION = 4


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ArgumentError instead of exiting."""

    def error(self, message):
        raise ArgumentError(message)


def parse_count(text: str) -> int:
    """Parse a positive integer bound; scientific notation such as 1e7 is accepted."""
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ArgumentError(f"not a number: {text!r}")
    if value != value.to_integral_value():
        raise ArgumentError(f"not an integer: {text!r}")
    return int(value)


def parse_moduli(values: Sequence[str]) -> List[int]:
    moduli = []
    for value in values:
        for part in value.split(","):
            if part:
                moduli.append(parse_count(part))
    return moduli


def parse_condition(text: str):
    try:
        a1, d1 = text.split(":")
        return int(a1), int(d1)
    except ValueError:
        raise ArgumentError(f"condition must look like a1:d1, got {text!r}")


def parse_residues(text: str, d: int, odd_only: bool = False) -> List[int]:
    if text == "all":
        residues = list(range(d))
    else:
        residues = sorted({int(part) % d for part in text.split(",") if part})
    if odd_only:
        residues = [a for a in residues if a % 2 == 1]
    return residues


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orderdist", description="Distribution of ord_p(g) over residue classes.")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p):
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=["tsv", "json"], default="tsv")

    census = sub.add_parser("census", help="count N_g(a, d)(x) over the primes p <= x")
    census.add_argument("--g", required=True, help="base, an integer or n/m")
    census.add_argument("--x", required=True, type=parse_count)
    census.add_argument("--mod", required=True, nargs="+", help="order moduli d2, e.g. 4 5 or 4,5")
    census.add_argument("--cond", action="append", default=[], type=parse_condition, help="prime condition a1:d1")
    census.add_argument("--tmax", type=int, default=None)
    census.add_argument("--segments", type=parse_count, default=None, help="numbers sieved per segment")
    census.add_argument("--threads", type=int, default=None, help="worker processes")
    census.add_argument("--spf-limit", type=parse_count, default=None)
    census.add_argument("--memory-budget", type=int, default=None, help="MiB")
    census.add_argument("--checkpoint", default=None)
    output_flags(census)

    theory = sub.add_parser("theory", help="theoretical densities")
    theory.add_argument("--method", choices=["sum", "prime-average", "mod4", "hpsi"], default="sum")
    theory.add_argument("--mod", type=int, default=None)
    theory.add_argument("--a", default="all")
    theory.add_argument("--g", default=None)
    theory.add_argument("--T", type=parse_count, default=None)
    theory.add_argument("--N", type=parse_count, default=None)
    theory.add_argument("--x", type=parse_count, default=None)
    theory.add_argument("--n", type=int, default=None)
    theory.add_argument("--exact", action="store_true", help="exact rational prime average (small x only)")
    theory.add_argument("--delta-half", default=None, help="delta_g(1,2); switches mod4 to the half-density form")
    theory.add_argument("--n-max", type=int, default=20, help="last n for --method hpsi")
    theory.add_argument("--character", type=int, default=1, help="character index for --method hpsi")
    output_flags(theory)

    constants = sub.add_parser("constants", help="A and A_chi for every character mod d")
    constants.add_argument("--mod", type=int, required=True)
    constants.add_argument("--n", type=int, default=None)
    constants.add_argument("--oracle-cutoff", type=parse_count, default=None)
    output_flags(constants)

    comp = sub.add_parser(
        "compare", help="census frequencies against a theory table (the census must be written with --format json)"
    )
    comp.add_argument("census_path", help="census JSON document; TSV censuses lack pi(x) and are rejected")
    comp.add_argument("theory_path", help="theory table or a second census, TSV or JSON")
    output_flags(comp)

    sub.add_parser("selftest", help="brute-force oracles for p <= 200")

    gavg = sub.add_parser("gaverage", help="mean frequency over all bases 2 <= |g| <= g_max")
    gavg.add_argument("--mod", type=int, required=True)
    gavg.add_argument("--g-max", type=int, required=True)
    gavg.add_argument("--x", type=parse_count, required=True)
    gavg.add_argument("--threads", type=int, default=None)
    gavg.add_argument("--T", type=parse_count, default=None)
    gavg.add_argument("--N", type=parse_count, default=None)
    output_flags(gavg)
    return parser


# --- subcommands --------------------------------------------------------------------------


def cmd_census(args, settings: Settings) -> int:
    settings = settings.override(
        t_max=args.tmax,
        segment_size=args.segments,
        workers=args.threads,
        spf_limit=args.spf_limit,
        memory_budget_mb=args.memory_budget,
    )
    spec = CensusSpec(
        g=RationalBase.parse(args.g),
        x=args.x,
        order_moduli=tuple(parse_moduli(args.mod)),
        conditions=tuple(args.cond),
        t_max=settings.t_max,
        segment_size=settings.segment_size,
    )
    acc = run_census(
        spec,
        workers=settings.workers,
        spf_limit=settings.spf_limit,
        memory_budget_mb=settings.memory_budget_mb,
        checkpoint_path=args.checkpoint,
    )
    if acc.skipped:
        logger.warning("skipped %d prime(s) dividing g: %s", len(acc.skipped), ", ".join(map(str, acc.skipped)))
    text = render(census_table(acc), args.format, census_meta(acc), census_extras(acc))
    write_output(text, args.out)
    return EXIT_OK


def cmd_theory(args, settings: Settings) -> int:
    if args.method == "hpsi":
        d = args.mod or 4
        chars = character_group(d).characters()
        if not 0 <= args.character < len(chars):
            raise ArgumentError(f"character index must be in [0, {len(chars)}), got {args.character}")
        chi = chars[args.character]
        rows = []
        for n in range(1, args.n_max + 1):
            h = mu_convolution(chi, n)
            reduced = h.reduced()
            rows.append({"n": str(n), "h": " ".join(str(c) for c in reduced) or "0"})
        write_output(render(pd.DataFrame(rows, columns=["n", "h"]), args.format, {"kind": "hpsi", "modulus": str(d)}), args.out)
        return EXIT_OK

    if args.method == "mod4":
        if args.g is None:
            raise ArgumentError("--method mod4 needs --g")
        if args.mod not in (None, 4):
            raise ArgumentError("--method mod4 works modulo 4 only")
        g = RationalBase.parse(args.g)
        n = args.n or settings.product_n
        estimates = []
        for a in parse_residues(args.a, 4, odd_only=True):
            if args.delta_half is not None:
                estimates.append(delta_g_mod4_from_half(g, a, _parse_half(args.delta_half), n))
            else:
                estimates.append(delta_g_mod4(g, a, n))
        write_output(render(theory_table(estimates), args.format, {"kind": "theory", "g": str(g)}), args.out)
        return EXIT_OK

    if args.mod is None:
        raise ArgumentError(f"--method {args.method} needs --mod")
    if args.g is not None:
        raise ArgumentError(f"--g applies to --method mod4 only; {args.method} computes the average over g")
    residues = parse_residues(args.a, args.mod)
    if args.method == "sum":
        T = args.T or settings.sum_t
        N = max(args.N or settings.sum_n, args.mod, 2)
        estimates = [average_density_sum(a, args.mod, T, N) for a in residues]
    else:
        if args.x is None:
            raise ArgumentError("--method prime-average needs --x")
        estimates = [average_density_empirical(a, args.mod, args.x, exact=args.exact) for a in residues]
    write_output(render(theory_table(estimates), args.format, {"kind": "theory"}), args.out)
    return EXIT_OK


def _parse_half(text: str):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ArgumentError(f"--delta-half must be a number, got {text!r}")


def cmd_constants(args, settings: Settings) -> int:
    n = args.n or settings.product_n
    if n < MIN_PRODUCT_N:
        raise ArgumentError(f"--n must be >= {MIN_PRODUCT_N}: the R_1 bound of the product formula needs p_n >= 127")
    cutoff = args.oracle_cutoff or settings.oracle_cutoff
    rows = [ConstantRow(1, "A", 1, n, constant_A(1e-12))]
    for chi in character_group(args.mod).characters():
        value = a_chi(chi, n)
        naive = naive_a_chi(chi, cutoff)
        row = ConstantRow(args.mod, str(chi.index), chi.order, n, value, naive)
        if not row.agree:
            logger.warning("A_chi mod %d #%d: product formula and truncated product disagree", args.mod, chi.index)
        rows.append(row)
        logger.info("A_chi mod %d #%d (order %d) = %s +- %s", args.mod, chi.index, chi.order, format_fixed(float(value), 12), format_radius(value.radius))
    meta = {"kind": "constants", "modulus": str(args.mod), "n": str(n), "oracle_cutoff": str(cutoff)}
    write_output(render(constants_table(rows), args.format, meta), args.out)
    return EXIT_OK


def cmd_compare(args, settings: Settings) -> int:
    rows = compare(read_table(args.census_path), read_table(args.theory_path))
    summary = compare_summary(rows)
    logger.info("%s", summary)
    write_output(render(compare_table(rows), args.format, {"kind": "compare", "summary": summary}), args.out)
    return EXIT_OK


def cmd_selftest(args, settings: Settings) -> int:
    results = run_selftest()
    logger.info("[OK] %d self-test check(s) passed", len(results))
    return EXIT_OK


def cmd_gaverage(args, settings: Settings) -> int:
    settings = settings.override(workers=args.threads)
    result = g_average(args.mod, args.g_max, args.x, workers=settings.workers, segment_size=settings.segment_size)
    T = args.T or settings.sum_t
    N = max(args.N or settings.sum_n, args.mod, 2)
    rows = []
    for a, mean in enumerate(result.mean_frequencies):
        estimate = average_density_sum(a, args.mod, T, N)
        rows.append(
            {
                "a": str(a),
                "d": str(args.mod),
                "mean_freq": format_fixed(mean),
                "delta": format_fixed(estimate.value.center),
                "radius": format_radius(estimate.value.radius),
                "deviation": format_fixed(abs(mean - float(estimate.value.center))),
            }
        )
    table = pd.DataFrame(rows, columns=["a", "d", "mean_freq", "delta", "radius", "deviation"])
    meta = {"kind": "gaverage", "g_max": str(args.g_max), "x": str(args.x), "bases": str(len(result.bases))}
    write_output(render(table, args.format, meta), args.out)
    return EXIT_OK


COMMANDS = {
    "census": cmd_census,
    "theory": cmd_theory,
    "constants": cmd_constants,
    "compare": cmd_compare,
    "selftest": cmd_selftest,
    "gaverage": cmd_gaverage,
}


def configure_logging(level: str) -> None:
    if level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"unknown log level {level!r}")
    logging.basicConfig(level=level.upper(), format="[%(levelname)s] %(message)s", stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application; returns the process exit code."""
    load_dotenv()
    try:
        settings = Settings.from_env()
        args = build_parser().parse_args(argv)
        if args.log_level:
            settings = settings.override(log_level=args.log_level.upper())
        configure_logging(settings.log_level)
        return COMMANDS[args.command](args, settings)
    except (ArgumentError, ConfigError, HypothesisError, SpecMismatchError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except VerificationError as e:
        print(f"[ERROR] self-test failed: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except OrderDistError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
