"""Tables for the CLI: census counts, theory rows, constants and comparisons.

Every table is a pandas DataFrame whose cells are already-formatted strings, so
TSV and JSON output carry identical data and repeated runs are byte-identical.
"""

import json
import logging
import math
import sys
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import pandas as pd

from app.arith import RationalBase, is_in_G
from app.census import CensusAccumulator
from app.densities import METHOD_MOD4, METHOD_MOD4_HALF, DensityEstimate, closeness_bound
from app.errors import ArgumentError, SpecMismatchError
from app.utils.intervals import ErrorInterval

logger = logging.getLogger(__name__)

CENSUS_COLUMNS = ["g", "a", "d", "count", "freq"]
THEORY_COLUMNS = ["a", "d", "method", "center", "center_full", "radius", "certified", "params"]
CONSTANTS_COLUMNS = [
    "modulus",
    "index",
    "order",
    "n",
    "center",
    "center_full",
    "radius",
    "naive_center",
    "naive_radius",
    "agree",
]
COMPARE_COLUMNS = ["g", "a", "d", "emp", "center", "radius", "deviation", "sigma", "dev_sigma", "flags"]

Real = Union[int, Fraction, float, mpmath.mpf]


# --- number formatting -------------------------------------------------------------------


def _to_decimal(value: Real) -> Decimal:
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, Fraction):
        with localcontext() as ctx:
            ctx.prec = 60
            return Decimal(value.numerator) / Decimal(value.denominator)
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(mpmath.nstr(value, 40, strip_zeros=False))


def format_fixed(value: Real, places: int = 6) -> str:
    """Round half-even to a fixed number of decimals ("0.240673")."""
    quantum = Decimal(1).scaleb(-places)
    with localcontext() as ctx:
        ctx.prec = 80
        text = str(_to_decimal(value).quantize(quantum, rounding=ROUND_HALF_EVEN))
    return "0." + "0" * places if text.startswith("-") and Decimal(text) == 0 else text


def format_center(center, places: int = 6) -> str:
    """Fixed-point rendering of a real or complex center ("0.1+0.2i")."""
    if isinstance(center, mpmath.mpc) and center.imag != 0:
        im = format_fixed(abs(center.imag), places)
        sign = "-" if center.imag < 0 else "+"
        return f"{format_fixed(center.real, places)}{sign}{im}i"
    return format_fixed(mpmath.re(center) if isinstance(center, mpmath.mpc) else center, places)


def format_full(center) -> str:
    if isinstance(center, mpmath.mpc) and center.imag != 0:
        return f"{mpmath.nstr(center.real, 20)}{'+' if center.imag >= 0 else '-'}{mpmath.nstr(abs(center.imag), 20)}i"
    return mpmath.nstr(mpmath.re(center), 20)


def format_radius(radius) -> str:
    return mpmath.nstr(radius, 3)


# --- census -----------------------------------------------------------------------------


def census_table(acc: CensusAccumulator) -> pd.DataFrame:
    """One row per unconditional cell (a mod d): g, a, d, count, freq = count / pi(x)."""
    rows = []
    for d in acc.spec.order_moduli:
        for a in range(d):
            rows.append(
                {
                    "g": str(acc.spec.g),
                    "a": str(a),
                    "d": str(d),
                    "count": str(acc.count(a, d)),
                    "freq": format_fixed(acc.frequency(a, d)),
                }
            )
    return pd.DataFrame(rows, columns=CENSUS_COLUMNS)


def census_extras(acc: CensusAccumulator) -> Dict[str, object]:
    """Everything the TSV leaves out: conditional cells, V-counters, Legendre counter, skipped primes."""
    conditional = [
        {"a1": str(a1), "d1": str(d1), "a2": str(a2), "d2": str(d2), "count": str(c)}
        for (a1, d1, a2, d2), c in sorted(acc.order_counts.items(), key=lambda kv: (kv[0][1], kv[0][0], kv[0][3], kv[0][2]))
        if (a1, d1) != (0, 1)
    ]
    index = [
        {"a": str(a), "d": str(d), "t": str(t), "count": str(c)}
        for (a, d, t), c in sorted(acc.index_counts.items(), key=lambda kv: (kv[0][1], kv[0][0], kv[0][2]))
        if c
    ]
    overflow = [{"a": str(a), "d": str(d), "count": str(c)} for (a, d), c in sorted(acc.overflow.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
    extras: Dict[str, object] = {
        "conditional": conditional,
        "index": index,
        "overflow": overflow,
        "skipped": [str(p) for p in acc.skipped],
    }
    if acc.spec.collect_legendre:
        extras["legendre_3mod4_residue"] = str(acc.legendre_count)
    return extras


def census_meta(acc: CensusAccumulator) -> Dict[str, str]:
    return {
        "kind": "census",
        "g": str(acc.spec.g),
        "x": str(acc.spec.x),
        "pi": str(acc.prime_count),
        "t_max": str(acc.spec.t_max),
        "spec_hash": acc.spec.spec_hash(),
    }


# --- theory ------------------------------------------------------------------------------


def theory_row(estimate: DensityEstimate) -> Dict[str, str]:
    value = estimate.value
    center = estimate.exact if estimate.exact is not None else value.center
    return {
        "a": str(estimate.a),
        "d": str(estimate.d),
        "method": estimate.method,
        "center": format_fixed(center),
        "center_full": str(estimate.exact) if estimate.exact is not None else format_full(value.center),
        "radius": format_radius(value.radius) if estimate.certified else "",
        "certified": "true" if estimate.certified else "false",
        "params": ";".join(f"{k}={v}" for k, v in sorted(estimate.params.items())),
    }


def theory_table(estimates: Sequence[DensityEstimate]) -> pd.DataFrame:
    return pd.DataFrame([theory_row(e) for e in estimates], columns=THEORY_COLUMNS)


# --- constants ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantRow:
    modulus: int
    index: str
    order: int
    n: int
    value: ErrorInterval
    naive: Optional[ErrorInterval] = None

    @property
    def agree(self) -> Optional[bool]:
        if self.naive is None:
            return None
        return self.value.overlaps(self.naive)


def constants_table(rows: Sequence[ConstantRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        records.append(
            {
                "modulus": str(row.modulus),
                "index": row.index,
                "order": str(row.order),
                "n": str(row.n),
                "center": format_center(row.value.center, 12),
                "center_full": format_full(row.value.center),
                "radius": format_radius(row.value.radius),
                "naive_center": format_center(row.naive.center, 12) if row.naive is not None else "",
                "naive_radius": format_radius(row.naive.radius) if row.naive is not None else "",
                "agree": "" if row.agree is None else str(row.agree).lower(),
            }
        )
    return pd.DataFrame(records, columns=CONSTANTS_COLUMNS)


# --- output -------------------------------------------------------------------------------


def render(
    table: pd.DataFrame,
    fmt: str = "tsv",
    meta: Optional[Dict[str, str]] = None,
    extras: Optional[Dict[str, object]] = None,
) -> str:
    """TSV text, or a JSON document {"meta", "rows", "extras"} with the same rows."""
    if fmt == "tsv":
        return table.to_csv(sep="\t", index=False, lineterminator="\n")
    if fmt == "json":
        doc = {"meta": meta or {}, "rows": table.to_dict(orient="records")}
        if extras:
            doc["extras"] = extras
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise ArgumentError(f"unknown output format {fmt!r} (use tsv or json)")


def write_output(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("wrote %s", path)


def read_table(path: str) -> Tuple[Dict[str, str], pd.DataFrame]:
    """Read a table written by `render`: returns (meta, rows); TSV files carry no meta."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return doc.get("meta", {}), pd.DataFrame(doc.get("rows", []), dtype=str)
    from io import StringIO

    return {}, pd.read_csv(StringIO(text), sep="\t", dtype=str, keep_default_na=False)


# --- comparison ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    """One (g, a, d) cell: empirical frequency next to a theoretical value.

    sigma is the binomial heuristic sqrt(c (1 - c) / pi(x)); it is not a proven bound.
    """

    g: str
    a: int
    d: int
    emp: Fraction
    center: Optional[float]
    radius: Optional[float]
    pi: int
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def deviation(self) -> Optional[float]:
        if self.center is None:
            return None
        return abs(float(self.emp) - self.center)

    @property
    def sigma(self) -> Optional[float]:
        if self.center is None or self.pi <= 0:
            return None
        c = min(max(self.center, 0.0), 1.0)
        return math.sqrt(c * (1 - c) / self.pi)

    @property
    def dev_sigma(self) -> Optional[float]:
        sigma = self.sigma
        if sigma is None or sigma == 0:
            return None
        return self.deviation / sigma


def _parse_real(text: str) -> float:
    """A center_full cell: a decimal, or an exact fraction such as "1/6"."""
    if "/" in text:
        return float(Fraction(text))
    return float(mpmath.mpf(text))


def _params(text: str) -> Dict[str, str]:
    return dict(item.split("=", 1) for item in text.split(";") if "=" in item) if text else {}


def compare(census_doc: Tuple[Dict[str, str], pd.DataFrame], theory_doc: Tuple[Dict[str, str], pd.DataFrame]) -> List[CompareRow]:
    """Pair every census cell with the theory row for the same (a, d).

    The theory side may be a theory table (center_full/radius columns) or another
    census table (its freq column is used as an exact center).

    Raises:
        SpecMismatchError: If the census is not a JSON census document, if no
            modulus is shared, or if a g-specific theory row names another g.
    """
    meta, census_rows = census_doc
    if meta.get("kind") != "census" or "pi" not in meta:
        raise SpecMismatchError("compare needs a census written with --format json")
    g_text = meta["g"]
    pi = int(meta["pi"])
    theory_meta, theory_rows = theory_doc
    theory_pi = int(theory_meta.get("pi", "0") or 0)

    theory: Dict[Tuple[int, int], Tuple[float, Optional[float], str, Dict[str, str]]] = {}
    for _, row in theory_rows.iterrows():
        key = (int(row["a"]), int(row["d"]))
        if "center_full" in row and row.get("center_full", ""):
            params = _params(row.get("params", ""))
            method = row.get("method", "")
            if method in (METHOD_MOD4, METHOD_MOD4_HALF) and params.get("g") != g_text:
                raise SpecMismatchError(f"theory row for g={params.get('g')} compared against census of g={g_text}")
            radius = float(row["radius"]) if row.get("radius", "") else None
            theory[key] = (_parse_real(row["center_full"]), radius, method, params)
        elif "freq" in row:
            if theory_pi and "count" in row:
                center = float(Fraction(int(row["count"]), theory_pi))
            else:
                center = float(row["freq"])
            theory[key] = (center, 0.0, "census", {})

    census_moduli = {int(d) for d in census_rows["d"]}
    if theory and not census_moduli & {d for _, d in theory}:
        raise SpecMismatchError(f"census moduli {sorted(census_moduli)} share nothing with the theory table")

    g = RationalBase.parse(g_text)
    in_G = g.is_integer and is_in_G(g.numerator)
    rows: List[CompareRow] = []
    for _, row in census_rows.iterrows():
        a, d = int(row["a"]), int(row["d"])
        emp = Fraction(int(row["count"]), pi) if pi else Fraction(0)
        if (a, d) not in theory:
            rows.append(CompareRow(g_text, a, d, emp, None, None, pi, ("no-theory",)))
            continue
        center, radius, method, _ = theory[(a, d)]
        flags: List[str] = []
        if radius is None:
            flags.append("heuristic")
        if method not in (METHOD_MOD4, METHOD_MOD4_HALF, "census") and in_G:
            bound = closeness_bound(g, d)
            if bound.vacuous:
                flags.append("vacuous-bound")
            if abs(float(emp) - center) <= float(bound.value) + (radius or 0.0):
                flags.append("within-bound")
            flags.append(f"bound={format_fixed(bound.value)}")
        rows.append(CompareRow(g_text, a, d, emp, center, radius, pi, tuple(flags)))
    return rows


def compare_table(rows: Sequence[CompareRow]) -> pd.DataFrame:
    def opt(value: Optional[float], places: int = 6) -> str:
        return "" if value is None else format_fixed(value, places)

    records = [
        {
            "g": row.g,
            "a": str(row.a),
            "d": str(row.d),
            "emp": format_fixed(row.emp),
            "center": opt(row.center),
            "radius": "" if row.radius is None else format_radius(row.radius),
            "deviation": opt(row.deviation),
            "sigma": opt(row.sigma),
            "dev_sigma": opt(row.dev_sigma, 3),
            "flags": ",".join(row.flags),
        }
        for row in rows
    ]
    return pd.DataFrame(records, columns=COMPARE_COLUMNS)


def compare_summary(rows: Sequence[CompareRow]) -> str:
    ratios = [row.dev_sigma for row in rows if row.dev_sigma is not None]
    deviations = [row.deviation for row in rows if row.deviation is not None]
    if not ratios:
        return "no comparable cells"
    return f"max |deviation| = {max(deviations):.6f}, max |deviation|/sigma = {max(ratios):.3f} over {len(ratios)} cells"
