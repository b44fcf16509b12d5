"""Runtime configuration read from the environment (and a local .env file)."""

import os
from dataclasses import dataclass, replace
from typing import Optional

from app.errors import ConfigError


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(float(raw)) if "e" in raw.lower() else int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    """Defaults for every tunable knob; CLI flags override individual fields.

    Attributes:
        segment_size: Numbers sieved per census segment.
        workers: Worker processes used by the census.
        spf_limit: Values below this are factorized through a smallest-prime-factor table.
        memory_budget_mb: Upper bound on the estimated census working set.
        t_max: Largest residual index tracked individually by the V-counters.
        product_n: Number of primes in the finite product S(n) of the L-value formula.
        oracle_cutoff: Prime cutoff P of the naive Euler-product oracle.
        sum_t: t-cutoff T of the degenerate density sum.
        sum_n: prime cutoff N for n in the degenerate density sum.
        log_level: Root logger level name.
    """

    segment_size: int = 1 << 22
    workers: int = 1
    spf_limit: int = 1 << 24
    memory_budget_mb: int = 2048
    t_max: int = 64
    product_n: int = 64
    oracle_cutoff: int = 1_000_000
    sum_t: int = 200_000
    sum_n: int = 200_000
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from ORDERDIST_* environment variables, falling back to defaults."""
        base = cls()
        level = (os.getenv("ORDERDIST_LOG_LEVEL") or base.log_level).upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"ORDERDIST_LOG_LEVEL must be a logging level name, got {level!r}")
        return cls(
            segment_size=_env_int("ORDERDIST_SEGMENT_SIZE", base.segment_size, minimum=64),
            workers=_env_int("ORDERDIST_WORKERS", base.workers),
            spf_limit=_env_int("ORDERDIST_SPF_LIMIT", base.spf_limit, minimum=2),
            memory_budget_mb=_env_int("ORDERDIST_MEMORY_BUDGET_MB", base.memory_budget_mb),
            t_max=_env_int("ORDERDIST_TMAX", base.t_max),
            product_n=_env_int("ORDERDIST_PRODUCT_N", base.product_n, minimum=31),
            oracle_cutoff=_env_int("ORDERDIST_ORACLE_CUTOFF", base.oracle_cutoff, minimum=3),
            sum_t=_env_int("ORDERDIST_SUM_T", base.sum_t),
            sum_n=_env_int("ORDERDIST_SUM_N", base.sum_n, minimum=2),
            log_level=level,
        )

    def override(self, **changes: Optional[object]) -> "Settings":
        """Return a copy with every non-None keyword applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})
