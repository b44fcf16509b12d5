"""Prime census: order and index statistics of a fixed base g over p <= x.

Primes are produced segment by segment; every segment is processed into its own
``CensusAccumulator`` and the partial results are merged in segment order, so
the counts do not depend on the segment size or on the number of workers.
Worker processes get the spec and a factorization table once, through the pool
initializer, and only (lo, hi) pairs travel per task.
"""

import hashlib
import json
import logging
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

from app.arith import DEFAULT_SEGMENT_SIZE, Factorizer, RationalBase, base_primes, multiplicative_order
from app.errors import (
    ArgumentError,
    CapacityError,
    CheckpointError,
    CheckpointVersionError,
    SpecMismatchError,
    VerificationError,
)
from app.utils.sieve import segment_bounds, sieve_segment

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
UNCONDITIONAL = (0, 1)

OrderKey = Tuple[int, int, int, int]  # (a1, d1, a2, d2)
IndexKey = Tuple[int, int, int]  # (a, d, t)
ClassKey = Tuple[int, int]  # (a, d)


@dataclass(frozen=True)
class CensusSpec:
    """What a census counts.

    Attributes:
        g: The base.
        x: Primes p <= x are examined.
        order_moduli: Moduli d2 for the order classes ord_p(g) = a2 (mod d2).
        conditions: Prime conditions p = a1 (mod d1); (0, 1) ("all primes") is always present.
        t_max: Residual indices t <= t_max get their own V-counter, larger ones go to overflow.
        segment_size: Numbers sieved per segment.
    """

    g: RationalBase
    x: int
    order_moduli: Tuple[int, ...]
    conditions: Tuple[Tuple[int, int], ...] = (UNCONDITIONAL,)
    t_max: int = 64
    segment_size: int = DEFAULT_SEGMENT_SIZE

    def __post_init__(self):
        object.__setattr__(self, "g", RationalBase.of(self.g))
        if self.x < 3:
            raise ArgumentError(f"census needs x >= 3, got {self.x}")
        if not self.order_moduli or any(d < 1 for d in self.order_moduli):
            raise ArgumentError(f"order moduli must be positive, got {self.order_moduli}")
        if self.t_max < 1:
            raise ArgumentError(f"t_max must be >= 1, got {self.t_max}")
        if self.segment_size < 64:
            raise ArgumentError(f"segment size must be >= 64, got {self.segment_size}")
        conditions = set()
        for a1, d1 in self.conditions:
            if d1 < 1:
                raise ArgumentError(f"condition modulus must be positive, got {d1}")
            conditions.add((a1 % d1, d1))
        conditions.add(UNCONDITIONAL)
        object.__setattr__(self, "order_moduli", tuple(sorted(set(self.order_moduli))))
        object.__setattr__(self, "conditions", tuple(sorted(conditions, key=lambda c: (c[1], c[0]))))

    @property
    def collect_legendre(self) -> bool:
        return 4 in self.order_moduli

    def order_cells(self) -> Iterable[OrderKey]:
        for a1, d1 in self.conditions:
            for d2 in self.order_moduli:
                for a2 in range(d2):
                    yield (a1, d1, a2, d2)

    def index_cells(self) -> Iterable[IndexKey]:
        for d in self.order_moduli:
            for a in range(d):
                for t in range(1, self.t_max + 1):
                    yield (a, d, t)

    def signature(self) -> Dict[str, object]:
        """The part of the spec two partial results must share to be merged (not x, not segmentation)."""
        return {
            "g": str(self.g),
            "order_moduli": [str(d) for d in self.order_moduli],
            "conditions": [[str(a1), str(d1)] for a1, d1 in self.conditions],
            "t_max": str(self.t_max),
        }

    def spec_hash(self) -> str:
        payload = json.dumps(self.signature(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class CensusAccumulator:
    """Counters of one census (or of a union of disjoint prime ranges of it)."""

    spec: CensusSpec
    order_counts: Dict[OrderKey, int] = field(default_factory=dict)
    index_counts: Dict[IndexKey, int] = field(default_factory=dict)
    overflow: Dict[ClassKey, int] = field(default_factory=dict)
    legendre_count: int = 0
    prime_count: int = 0
    skipped: List[int] = field(default_factory=list)
    ranges: List[Tuple[int, int]] = field(default_factory=list)

    @classmethod
    def empty(cls, spec: CensusSpec) -> "CensusAccumulator":
        acc = cls(spec)
        acc.order_counts = {key: 0 for key in spec.order_cells()}
        acc.index_counts = {key: 0 for key in spec.index_cells()}
        acc.overflow = {(a, d): 0 for d in spec.order_moduli for a in range(d)}
        return acc

    @property
    def covered_upto(self) -> int:
        """Largest hi of the covered ranges (1 if nothing is covered)."""
        return max((hi for _, hi in self.ranges), default=1)

    def count(self, a: int, d: int, a1: int = 0, d1: int = 1) -> int:
        """N_g(a1, d1; a, d) over the covered primes."""
        key = (a1 % d1, d1, a % d, d)
        if key not in self.order_counts:
            raise ArgumentError(f"cell {key} is not part of this census")
        return self.order_counts[key]

    def frequency(self, a: int, d: int, a1: int = 0, d1: int = 1) -> Fraction:
        """count / pi(x); the skipped primes stay in the denominator."""
        if self.prime_count == 0:
            return Fraction(0)
        return Fraction(self.count(a, d, a1, d1), self.prime_count)

    def index_total(self, a: int, d: int) -> int:
        """sum over t <= t_max of V_g(a, d; t), plus the overflow bucket."""
        a %= d
        total = self.overflow[(a, d)]
        for t in range(1, self.spec.t_max + 1):
            total += self.index_counts[(a, d, t)]
        return total

    def check_identities(self) -> None:
        """Verify the partition and index identities exactly.

        Raises:
            VerificationError: If sum_a N(a, d) + |skipped| != pi(x) or if
                sum_t V(a, d; t) + overflow != N(a, d) for some configured class.
        """
        for d in self.spec.order_moduli:
            total = sum(self.count(a, d) for a in range(d))
            if total + len(self.skipped) != self.prime_count:
                raise VerificationError(
                    f"partition identity fails for d={d}: {total} + {len(self.skipped)} != {self.prime_count}"
                )
            for a in range(d):
                if self.index_total(a, d) != self.count(a, d):
                    raise VerificationError(
                        f"index identity fails for ({a}, {d}): {self.index_total(a, d)} != {self.count(a, d)}"
                    )


def _coalesce(ranges: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    merged: List[Tuple[int, int]] = []
    for lo, hi in sorted(ranges):
        if merged and lo <= merged[-1][1]:
            raise SpecMismatchError(f"range [{lo}, {hi}] overlaps [{merged[-1][0]}, {merged[-1][1]}]")
        if merged and lo == merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def merge(acc1: CensusAccumulator, acc2: CensusAccumulator) -> CensusAccumulator:
    """Componentwise sum of two results over disjoint prime ranges.

    The merged spec keeps the larger x.

    Raises:
        SpecMismatchError: If the specs count different things or the ranges overlap.
    """
    if acc1.spec.spec_hash() != acc2.spec.spec_hash():
        raise SpecMismatchError(f"cannot merge censuses with specs {acc1.spec.signature()} and {acc2.spec.signature()}")
    spec = acc1.spec if acc1.spec.x >= acc2.spec.x else acc2.spec
    ranges = _coalesce(acc1.ranges + acc2.ranges)

    def summed(left: Dict, right: Dict) -> Dict:
        out = dict(left)
        for key, value in right.items():
            out[key] = out.get(key, 0) + value
        return out

    return CensusAccumulator(
        spec=spec,
        order_counts=summed(acc1.order_counts, acc2.order_counts),
        index_counts=summed(acc1.index_counts, acc2.index_counts),
        overflow=summed(acc1.overflow, acc2.overflow),
        legendre_count=acc1.legendre_count + acc2.legendre_count,
        prime_count=acc1.prime_count + acc2.prime_count,
        skipped=sorted(acc1.skipped + acc2.skipped),
        ranges=ranges,
    )


# --- segment workers ------------------------------------------------------------------


@dataclass(frozen=True)
class _WorkerState:
    spec: CensusSpec
    factorizer: Factorizer


# Per-process state, set by `_init_worker` (pool initializer or in-process run).
_STATE: Optional[_WorkerState] = None


def _init_worker(spec: CensusSpec, spf_limit: int) -> None:
    global _STATE
    _STATE = _WorkerState(spec, Factorizer(spf_limit=spf_limit))


def census_segment(spec: CensusSpec, factorizer: Factorizer, lo: int, hi: int) -> CensusAccumulator:
    """Count the primes in [lo, hi] (inclusive) into a fresh accumulator."""
    acc = CensusAccumulator.empty(spec)
    acc.ranges = [(lo, hi)]
    primes = sieve_segment(lo, hi, base_primes(math.isqrt(hi))).tolist()
    g = spec.g
    height = g.height
    moduli = spec.order_moduli
    conditions = spec.conditions
    t_max = spec.t_max
    order_counts = acc.order_counts
    index_counts = acc.index_counts
    overflow = acc.overflow
    legendre = spec.collect_legendre
    sample_check = logger.isEnabledFor(logging.DEBUG)

    for i, p in enumerate(primes):
        if height % p == 0:
            acc.skipped.append(p)
            continue
        order = multiplicative_order(g, p, factorizer.factorize(p - 1) if p > 2 else None)
        r = (p - 1) // order
        if sample_check and i % 1000 == 0:
            residue = g.residue(p)
            if pow(residue, order, p) != 1 or r * order != p - 1:
                raise VerificationError(f"order check failed at p={p}")
        for a1, d1 in conditions:
            if p % d1 == a1:
                for d2 in moduli:
                    order_counts[(a1, d1, order % d2, d2)] += 1
        for d in moduli:
            # p = 1 + t a (mod d t) with t = r_p(g)
            a = ((p - 1) % (d * r)) // r
            if r <= t_max:
                index_counts[(a, d, r)] += 1
            else:
                overflow[(a, d)] += 1
        if legendre and p % 4 == 3 and r % 2 == 0:
            acc.legendre_count += 1
    acc.prime_count = len(primes)
    return acc


def _census_task(bounds: Tuple[int, int]) -> CensusAccumulator:
    if _STATE is None:
        raise RuntimeError("census worker used before initialisation")
    return census_segment(_STATE.spec, _STATE.factorizer, *bounds)


# --- orchestration ------------------------------------------------------------------


def estimate_memory_bytes(spec: CensusSpec, workers: int, spf_limit: int) -> int:
    """Rough per-run working set: every worker holds a factor table and one segment."""
    table = 4 * min(spf_limit, spec.x + 1)
    segment = 9 * min(spec.segment_size, spec.x)
    return workers * (table + segment + (1 << 22))


def check_capacity(spec: CensusSpec, workers: int, spf_limit: int, memory_budget_mb: int) -> None:
    """Raise CapacityError when the estimated working set exceeds the budget."""
    needed = estimate_memory_bytes(spec, workers, spf_limit)
    budget = memory_budget_mb * (1 << 20)
    if needed > budget:
        raise CapacityError(
            f"census of x={spec.x} needs about {needed >> 20} MiB with {workers} worker(s), "
            f"budget is {memory_budget_mb} MiB; use smaller segments, fewer workers or a lower factor-table limit"
        )


def run_census(
    spec: CensusSpec,
    workers: int = 1,
    spf_limit: int = 1 << 24,
    memory_budget_mb: int = 2048,
    checkpoint_path: Optional[str] = None,
    checkpoint_every: int = 16,
) -> CensusAccumulator:
    """Run the census for all primes p <= spec.x.

    Args:
        spec: What to count.
        workers: Number of processes; 1 runs in-process.
        spf_limit: Size of each worker's smallest-prime-factor table.
        memory_budget_mb: Upper bound for the estimated working set.
        checkpoint_path: If given, progress is written there every `checkpoint_every`
            segments, and an existing checkpoint for the same spec is resumed.

    Raises:
        CapacityError: If the run would exceed the memory budget.
        CheckpointError: If an existing checkpoint cannot be resumed.
    """
    if workers < 1:
        raise ArgumentError(f"workers must be >= 1, got {workers}")
    spf_limit = max(2, min(spf_limit, spec.x + 1))
    check_capacity(spec, workers, spf_limit, memory_budget_mb)

    acc = CensusAccumulator.empty(spec)
    if checkpoint_path and os.path.exists(checkpoint_path):
        acc = _resume(spec, checkpoint_path)
    start = acc.covered_upto + 1 if acc.ranges else 2
    segments = list(segment_bounds(start, spec.x, spec.segment_size))
    logger.info("census g=%s x=%d: %d segment(s) from %d, %d worker(s)", spec.g, spec.x, len(segments), start, workers)
    started = time.perf_counter()

    if workers == 1 or len(segments) <= 1:
        _init_worker(spec, spf_limit)
        results = map(_census_task, segments)
        acc = _collect(acc, results, len(segments), checkpoint_path, checkpoint_every)
    else:
        with mp.get_context().Pool(workers, initializer=_init_worker, initargs=(spec, spf_limit)) as pool:
            results = pool.imap(_census_task, segments)
            acc = _collect(acc, results, len(segments), checkpoint_path, checkpoint_every)

    if checkpoint_path:
        checkpoint_write(acc, checkpoint_path)
    acc.check_identities()
    logger.info(
        "census g=%s x=%d done: pi(x)=%d, %d skipped, %.2fs",
        spec.g,
        spec.x,
        acc.prime_count,
        len(acc.skipped),
        time.perf_counter() - started,
    )
    return acc


def _collect(
    acc: CensusAccumulator,
    results: Iterable[CensusAccumulator],
    total: int,
    checkpoint_path: Optional[str],
    checkpoint_every: int,
) -> CensusAccumulator:
    for done, part in enumerate(results, start=1):
        acc = merge(acc, part)
        logger.debug("segment %d/%d up to %d merged", done, total, part.covered_upto)
        if checkpoint_path and done % checkpoint_every == 0:
            checkpoint_write(acc, checkpoint_path)
    return acc


def _resume(spec: CensusSpec, path: str) -> CensusAccumulator:
    acc = checkpoint_read(path)
    if acc.spec.spec_hash() != spec.spec_hash():
        raise CheckpointError(f"checkpoint {path} was written for a different census")
    if acc.ranges and (len(acc.ranges) != 1 or acc.ranges[0][0] != 2):
        raise CheckpointError(f"checkpoint {path} does not cover a prefix [2, m]: {acc.ranges}")
    if acc.covered_upto > spec.x:
        raise CheckpointError(f"checkpoint {path} already covers beyond x={spec.x}")
    logger.info("resuming from checkpoint %s (covered up to %d)", path, acc.covered_upto)
    acc.spec = spec
    return acc


# --- checkpoints ----------------------------------------------------------------------

_KIND_ORDER = {"order": 0, "index": 1, "overflow": 2}


def _record(kind: str, a1=None, d1=None, a2=None, d2=None, t=None, count: int = 0) -> Dict[str, Optional[str]]:
    def s(v):
        return None if v is None else str(v)

    return {"kind": kind, "a1": s(a1), "d1": s(d1), "a2": s(a2), "d2": s(d2), "t": s(t), "count": str(count)}


def _records(acc: CensusAccumulator) -> List[Dict[str, Optional[str]]]:
    rows = [_record("order", a1, d1, a2, d2, count=c) for (a1, d1, a2, d2), c in acc.order_counts.items()]
    rows += [_record("index", a2=a, d2=d, t=t, count=c) for (a, d, t), c in acc.index_counts.items()]
    rows += [_record("overflow", a2=a, d2=d, count=c) for (a, d), c in acc.overflow.items()]

    def key(rec):
        ints = [int(rec[k]) if rec[k] is not None else -1 for k in ("d1", "a1", "d2", "a2", "t")]
        return (_KIND_ORDER[rec["kind"]], *ints)

    return sorted(rows, key=key)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def checkpoint_write(acc: CensusAccumulator, path: str) -> None:
    """Write the accumulator as canonical JSON lines: one header, then one line per counter.

    The file is replaced atomically; rewriting an unchanged accumulator produces
    byte-identical output.
    """
    spec = acc.spec
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "g": f"{spec.g.numerator}/{spec.g.denominator}",
        "x": str(spec.x),
        "spec_hash": spec.spec_hash(),
        "spec": spec.signature(),
        "segment_size": str(spec.segment_size),
        "ranges": [[str(lo), str(hi)] for lo, hi in acc.ranges],
        "prime_count": str(acc.prime_count),
        "legendre_count": str(acc.legendre_count),
        "skipped": [str(p) for p in acc.skipped],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dumps(header) + "\n")
        for rec in _records(acc):
            f.write(_dumps(rec) + "\n")
    os.replace(tmp, path)
    logger.info("checkpoint written to %s (covered up to %d)", path, acc.covered_upto)


def checkpoint_read(path: str) -> CensusAccumulator:
    """Read a checkpoint written by `checkpoint_write`.

    Raises:
        CheckpointVersionError: If the header declares another format version.
        CheckpointError: If the file is missing, malformed or internally inconsistent.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().split("\n") if line]
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    if not lines:
        raise CheckpointError(f"checkpoint {path} is empty")
    try:
        header = json.loads(lines[0])
        version = header.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointVersionError(f"checkpoint {path} has format version {version!r}, expected {CHECKPOINT_FORMAT_VERSION}")
        signature = header["spec"]
        spec = CensusSpec(
            g=RationalBase.parse(header["g"]),
            x=int(header["x"]),
            order_moduli=tuple(int(d) for d in signature["order_moduli"]),
            conditions=tuple((int(a1), int(d1)) for a1, d1 in signature["conditions"]),
            t_max=int(signature["t_max"]),
            segment_size=int(header["segment_size"]),
        )
        if spec.spec_hash() != header["spec_hash"]:
            raise CheckpointError(f"checkpoint {path}: spec hash does not match its spec")
        acc = CensusAccumulator.empty(spec)
        acc.ranges = [(int(lo), int(hi)) for lo, hi in header["ranges"]]
        acc.prime_count = int(header["prime_count"])
        acc.legendre_count = int(header["legendre_count"])
        acc.skipped = [int(p) for p in header["skipped"]]
        for line in lines[1:]:
            rec = json.loads(line)
            kind, count = rec["kind"], int(rec["count"])
            if kind == "order":
                key = (int(rec["a1"]), int(rec["d1"]), int(rec["a2"]), int(rec["d2"]))
                target = acc.order_counts
            elif kind == "index":
                key = (int(rec["a2"]), int(rec["d2"]), int(rec["t"]))
                target = acc.index_counts
            elif kind == "overflow":
                key = (int(rec["a2"]), int(rec["d2"]))
                target = acc.overflow
            else:
                raise CheckpointError(f"checkpoint {path}: unknown record kind {kind!r}")
            if key not in target:
                raise CheckpointError(f"checkpoint {path}: record {rec} is not a cell of its spec")
            target[key] = count
    except CheckpointError:
        raise
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointError(f"checkpoint {path} is corrupt: {e}")
    return acc


# --- g-average diagnostic ------------------------------------------------------------


@dataclass(frozen=True)
class GAverage:
    """Mean census frequencies over the bases 2 <= |g| <= g_max."""

    d: int
    x: int
    bases: Tuple[int, ...]
    mean_frequencies: Tuple[float, ...]


def g_average(d: int, g_max: int, x: int, workers: int = 1, segment_size: int = DEFAULT_SEGMENT_SIZE) -> GAverage:
    """Average N_g(a, d)(x)/pi(x) over every integer g with 2 <= |g| <= g_max."""
    if g_max < 2:
        raise ArgumentError(f"g_max must be >= 2, got {g_max}")
    bases = tuple(sign * g for g in range(2, g_max + 1) for sign in (1, -1))
    columns: List[List[float]] = [[] for _ in range(d)]
    for g in bases:
        spec = CensusSpec(RationalBase(g), x, (d,), t_max=1, segment_size=segment_size)
        acc = run_census(spec, workers=workers)
        for a in range(d):
            columns[a].append(float(acc.frequency(a, d)))
    means = tuple(math.fsum(col) / len(bases) for col in columns)
    logger.info("g-average over %d bases at x=%d: %s", len(bases), x, ", ".join(f"{m:.6f}" for m in means))
    return GAverage(d, x, bases, means)
