import math
import os
from fractions import Fraction

import pytest
from dotenv import load_dotenv

from app.arith import Factorizer, RationalBase
from app.census import (
    CHECKPOINT_FORMAT_VERSION,
    CensusAccumulator,
    CensusSpec,
    census_segment,
    checkpoint_read,
    checkpoint_write,
    check_capacity,
    g_average,
    merge,
    run_census,
)
from app.densities import Comparison, delta_g_mod4, order_comparison_predicate
from app.errors import (
    ArgumentError,
    CapacityError,
    CheckpointError,
    CheckpointVersionError,
    SpecMismatchError,
    VerificationError,
)

# Load environment variables from .env file
load_dotenv()

#: N_g(a, 5)(x) / pi(x) at x = 2038074743 for a = 0 .. 4
TABLE_FREQUENCIES = {
    2: (0.208333, 0.240673, 0.178706, 0.229270, 0.143017),
    -11: (0.208347, 0.235422, 0.178007, 0.233974, 0.144250),
    -5: (0.208348, 0.264146, 0.194858, 0.233282, 0.099365),
    5: (0.208348, 0.232581, 0.292840, 0.054488, 0.211742),
}


@pytest.fixture
def full_scale():
    """Gate for the x = 10^7 reproductions."""
    if not os.environ.get("ORDERDIST_FULL_TESTS"):
        pytest.skip("ORDERDIST_FULL_TESTS environment variable not set")
    return 10**7


def _spec(g=2, x=20, moduli=(4,), **kwargs):
    return CensusSpec(RationalBase.of(g), x, moduli, **kwargs)


def test_small_census():
    """g = 2, x = 20, d = 4 by hand: orders 2, 4, 3, 10, 12, 8, 18 at p = 3 .. 19."""
    print("\n=== Testing Small Census ===")
    acc = run_census(_spec())
    print(f"counts: {[acc.count(a, 4) for a in range(4)]}, skipped {acc.skipped}")
    assert [acc.count(a, 4) for a in range(4)] == [3, 0, 3, 1]
    assert acc.skipped == [2]
    assert acc.prime_count == 8
    assert acc.legendre_count == 1
    assert acc.index_counts[(3, 4, 2)] == 1
    assert acc.frequency(0, 4) == Fraction(3, 8)
    acc.check_identities()
    with pytest.raises(ArgumentError):
        acc.count(1, 7)


def test_conditional_cells():
    """Every odd prime is 1 or 3 mod 4; p = 2 (where ord_2(3) = 1) is in neither condition."""
    acc = run_census(_spec(g=3, x=1000, moduli=(4, 5), conditions=((1, 4), (3, 4))))
    assert acc.skipped == [3]
    for d in (4, 5):
        for a in range(d):
            from_two = 1 if a == 1 else 0
            assert acc.count(a, d, 1, 4) + acc.count(a, d, 3, 4) == acc.count(a, d) - from_two


def test_spec_validation():
    with pytest.raises(ArgumentError):
        _spec(x=2)
    with pytest.raises(ArgumentError):
        _spec(moduli=())
    with pytest.raises(ArgumentError):
        _spec(segment_size=10)
    with pytest.raises(ArgumentError):
        _spec(g=1)
    spec = _spec(moduli=(5, 4, 5), conditions=((5, 4),))
    assert spec.order_moduli == (4, 5)
    assert spec.conditions == ((0, 1), (1, 4))
    assert spec.collect_legendre


def test_identities_hold_for_many_bases():
    for g in ("2", "3", "-3", "5", "1/2", "-11", "7/3", "12"):
        acc = run_census(_spec(g=g, x=20_000, moduli=(3, 4, 5, 8), t_max=4, segment_size=4096))
        acc.check_identities()


def test_identity_violation_is_detected():
    acc = run_census(_spec(x=200))
    acc.order_counts[(0, 1, 0, 4)] += 1
    with pytest.raises(VerificationError):
        acc.check_identities()


def test_merge_over_a_partition():
    """Two halves merged equal the census of the whole range."""
    print("\n=== Testing Merge ===")
    spec = _spec(x=50_000, moduli=(3, 4, 5), conditions=((1, 4),))
    factorizer = Factorizer(spf_limit=50_001)
    whole = census_segment(spec, factorizer, 2, 50_000)
    left = census_segment(spec, factorizer, 2, 21_000)
    right = census_segment(spec, factorizer, 21_001, 50_000)
    merged = merge(left, right)
    assert merged.order_counts == whole.order_counts
    assert merged.index_counts == whole.index_counts
    assert merged.overflow == whole.overflow
    assert merged.prime_count == whole.prime_count
    assert merged.legendre_count == whole.legendre_count
    assert merged.ranges == [(2, 50_000)]
    assert merge(CensusAccumulator.empty(spec), whole).order_counts == whole.order_counts
    with pytest.raises(SpecMismatchError):
        merge(left, left)
    with pytest.raises(SpecMismatchError):
        merge(left, census_segment(_spec(g=3, x=50_000, moduli=(3, 4, 5), conditions=((1, 4),)), factorizer, 21_001, 50_000))


def test_segmentation_and_workers_do_not_change_counts():
    """Small segments and 8 worker processes give the same counters as one pass."""
    base = run_census(_spec(x=200_000, moduli=(4, 5)))
    split = run_census(_spec(x=200_000, moduli=(4, 5), segment_size=7_919), workers=8)
    assert split.order_counts == base.order_counts
    assert split.index_counts == base.index_counts
    assert split.overflow == base.overflow
    assert split.skipped == base.skipped
    assert split.prime_count == base.prime_count == 17_984


def test_checkpoint_round_trip(tmp_path):
    print("\n=== Testing Checkpoints ===")
    path = str(tmp_path / "census.ckpt")
    acc = run_census(_spec(x=5000, moduli=(4, 5), conditions=((3, 4),), t_max=6, segment_size=1000))
    checkpoint_write(acc, path)
    with open(path, "rb") as f:
        first = f.read()
    again = checkpoint_read(path)
    assert again.order_counts == acc.order_counts
    assert again.index_counts == acc.index_counts
    assert again.skipped == acc.skipped
    checkpoint_write(again, path)
    with open(path, "rb") as f:
        assert f.read() == first


def test_checkpoint_rejects_other_versions(tmp_path):
    path = str(tmp_path / "census.ckpt")
    checkpoint_write(run_census(_spec(x=100)), path)
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().split("\n")
    lines[0] = lines[0].replace(f'"format_version":{CHECKPOINT_FORMAT_VERSION}', '"format_version":99')
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines))
    with pytest.raises(CheckpointVersionError):
        checkpoint_read(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write("not json\n")
    with pytest.raises(CheckpointError):
        checkpoint_read(path)
    with pytest.raises(CheckpointError):
        checkpoint_read(str(tmp_path / "missing.ckpt"))


def test_resume_from_checkpoint(tmp_path):
    """A census continued from a checkpoint at x/2 equals a direct run to x."""
    path = str(tmp_path / "resume.ckpt")
    direct = run_census(_spec(x=40_000, moduli=(4, 5), segment_size=2048))
    run_census(_spec(x=20_000, moduli=(4, 5), segment_size=2048), checkpoint_path=path)
    resumed = run_census(_spec(x=40_000, moduli=(4, 5), segment_size=2048), checkpoint_path=path)
    assert resumed.order_counts == direct.order_counts
    assert resumed.index_counts == direct.index_counts
    assert resumed.prime_count == direct.prime_count
    assert resumed.ranges == [(2, 40_000)]
    with pytest.raises(CheckpointError):
        run_census(_spec(g=3, x=40_000, moduli=(4, 5), segment_size=2048), checkpoint_path=path)


def test_capacity_check():
    spec = _spec(x=10**9, segment_size=1 << 22)
    with pytest.raises(CapacityError):
        check_capacity(spec, workers=8, spf_limit=1 << 26, memory_budget_mb=64)
    check_capacity(spec, workers=1, spf_limit=1 << 20, memory_budget_mb=2048)
    with pytest.raises(CapacityError):
        run_census(_spec(x=10**6), spf_limit=1 << 24, memory_budget_mb=1)


def test_desk_scale_frequencies():
    """At x = 10^6 the d = 5 frequencies of g = 2 are within 0.01 of the large-x values."""
    print("\n=== Testing Desk-Scale Census ===")
    acc = run_census(_spec(x=10**6, moduli=(5,)))
    for a, expected in enumerate(TABLE_FREQUENCIES[2]):
        freq = float(acc.frequency(a, 5))
        print(f"a={a}: {freq:.6f} (large x: {expected:.6f})")
        assert abs(freq - expected) <= 0.01


@pytest.fixture(scope="module")
def desk_censuses():
    """x = 10^6 censuses mod 3 and 4, split by p mod 4 and p mod 3."""
    conditions = ((1, 4), (3, 4), (2, 3))
    return {
        g: run_census(_spec(g=g, x=10**6, moduli=(3, 4), conditions=conditions))
        for g in (2, -2, 3, -3, 4, 5, -5)
    }


def test_desk_scale_mod4(desk_censuses):
    """N_g(a, 4)(x) / pi(x) is near the closed form for g = 5 (1/6) and g = 2."""
    print("\n=== Testing Desk-Scale delta_g(a, 4) ===")
    for g in (5, 2):
        acc = desk_censuses[g]
        for a in (1, 3):
            expected = float(delta_g_mod4(RationalBase(g), a).value.center)
            freq = float(acc.frequency(a, 4))
            print(f"g={g}, a={a}: {freq:.6f} (theory {expected:.6f})")
            assert abs(freq - expected) <= 0.015, f"g={g}, a={a}"


def test_desk_scale_sign_symmetry(desk_censuses):
    """N_g(3,4; a,4) + N_-g(3,4; a,4) is about pi(x)/4 for odd a."""
    for g in (2, 3, 5):
        plus, minus = desk_censuses[g], desk_censuses[-g]
        for a in (1, 3):
            total = plus.count(a, 4, 3, 4) + minus.count(a, 4, 3, 4)
            assert abs(total / plus.prime_count - 0.25) <= 0.015, f"g={g}, a={a}"


def test_desk_scale_equal_split_mod4(desk_censuses):
    """Among p = 1 (mod 4), orders 1 and 3 (mod 4) are equally frequent."""
    for g in (2, 3, 5):
        acc = desk_censuses[g]
        n1, n3 = acc.count(1, 4, 1, 4), acc.count(3, 4, 1, 4)
        assert abs(n1 - n3) <= 5 * math.sqrt(n1 + n3), f"g={g}: {n1} vs {n3}"


def test_order_comparison_matches_census(desk_censuses):
    """Among p = 2 (mod 3), N_g(2,3; 1,3) against N_g(2,3; 2,3) follows the predicted relation."""
    print("\n=== Testing Order Comparison Against the Census ===")
    for g in (2, 4, 3):
        acc = desk_censuses[g]
        ones, twos = acc.count(1, 3, 2, 3), acc.count(2, 3, 2, 3)
        relation = order_comparison_predicate(RationalBase(g))
        print(f"g={g}: {ones} vs {twos}, predicted {relation.value}")
        if relation == Comparison.GE:
            assert ones > twos
        elif relation == Comparison.LE:
            assert ones < twos
        else:
            assert abs(ones - twos) <= 5 * math.sqrt(ones + twos)
    assert order_comparison_predicate(RationalBase(2)) == Comparison.GE
    assert order_comparison_predicate(RationalBase(4)) == Comparison.LE
    assert order_comparison_predicate(RationalBase(3)) == Comparison.EQ


def test_g_average():
    result = g_average(5, 6, 20_000)
    assert result.bases == (2, -2, 3, -3, 4, -4, 5, -5, 6, -6)
    assert abs(sum(result.mean_frequencies) - 1) < 1e-3
    with pytest.raises(ArgumentError):
        g_average(5, 1, 1000)


def test_full_scale_table_frequencies(full_scale):
    for g, row in TABLE_FREQUENCIES.items():
        acc = run_census(_spec(g=g, x=full_scale, moduli=(5,)), workers=os.cpu_count() or 1)
        for a, expected in enumerate(row):
            assert abs(float(acc.frequency(a, 5)) - expected) <= 0.004, f"g={g}, a={a}"


def test_full_scale_mod4(full_scale):
    five = run_census(_spec(g=5, x=full_scale, moduli=(4,)))
    for a in (1, 3):
        assert abs(float(five.frequency(a, 4)) - 1 / 6) <= 0.004
    two = run_census(_spec(g=2, x=full_scale, moduli=(4,)))
    assert abs(float(two.frequency(1, 4)) - 0.065377) <= 0.004
    assert abs(float(two.frequency(3, 4)) - 0.226290) <= 0.004


def test_full_scale_sign_symmetry(full_scale):
    """N_g(3,4; a,4) + N_-g(3,4; a,4) is about pi(x)/4."""
    for g in (2, 3, 5):
        plus = run_census(_spec(g=g, x=full_scale, moduli=(4,), conditions=((3, 4), (1, 4))))
        minus = run_census(_spec(g=-g, x=full_scale, moduli=(4,), conditions=((3, 4), (1, 4))))
        for a in (1, 3):
            total = plus.count(a, 4, 3, 4) + minus.count(a, 4, 3, 4)
            assert abs(total / plus.prime_count - 0.25) <= 0.005, f"g={g}, a={a}"
        n1, n3 = plus.count(1, 4, 1, 4), plus.count(3, 4, 1, 4)
        assert abs(n1 - n3) <= 4 * math.sqrt(n1 + n3)
