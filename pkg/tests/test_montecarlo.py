import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zbtest import montecarlo
from zbtest.alternatives import parse_spec
from zbtest.errors import InvalidArgumentError, InvalidPlanError, MissingCriticalValueError
from zbtest.montecarlo import (
    BLOCK,
    CriticalValueTable,
    PowerTable,
    SimulationPlan,
    StatisticId,
    empirical_quantile,
    estimate_pvalue,
    missing_cells,
    simulate_critical_values,
    simulate_null,
    simulate_power,
    worker_count,
)
from zbtest.tables import load_bundled_table


@pytest.fixture(scope="module")
def bundled():
    return load_bundled_table()


# quantiles and p-values

def test_quantile_of_one_to_hundred():
    assert empirical_quantile(np.arange(1, 101), 0.95) == 95


@pytest.mark.parametrize("q", [0.01, 0.5, 0.99])
def test_quantile_of_singleton(q):
    assert empirical_quantile([7.0], q) == 7


def test_quantile_of_three():
    assert empirical_quantile([3, 1, 2], 0.5) == 2


def test_quantile_rejects_empty_and_bad_q():
    with pytest.raises(InvalidArgumentError):
        empirical_quantile([], 0.5)
    for q in (0.0, 1.0, -0.1):
        with pytest.raises(InvalidArgumentError):
            empirical_quantile([1.0, 2.0], q)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.floats(0.001, 0.999))
def test_quantile_is_the_ceiling_order_statistic(values, q):
    v = sorted(values)
    rank = max(1, math.ceil(q * len(v) - 1e-9 * len(v) * q))
    assert empirical_quantile(values, q) == v[rank - 1]


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=100), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_quantile_monotone_in_q(values, q1, q2):
    lo, hi = sorted((q1, q2))
    assert empirical_quantile(values, lo) <= empirical_quantile(values, hi)


def test_pvalue_above_all_nulls():
    null = np.arange(50.0)
    assert estimate_pvalue(100.0, null) == 1 / 51


def test_pvalue_below_all_nulls():
    assert estimate_pvalue(-1.0, np.arange(50.0)) == 1.0


def test_pvalue_at_median():
    null = np.arange(999.0)
    assert estimate_pvalue(499.0, null) == pytest.approx(0.5, abs=0.002)


def test_pvalue_empty_null():
    with pytest.raises(InvalidArgumentError):
        estimate_pvalue(1.0, [])


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=100), st.floats(-200, 200))
def test_pvalue_in_unit_interval(null, v):
    p = estimate_pvalue(v, null)
    assert 0 < p <= 1


# plans

@pytest.mark.parametrize("kwargs", [
    dict(replications=0, sample_sizes=(20,)),
    dict(replications=99, sample_sizes=(20,)),
    dict(replications=100.5, sample_sizes=(20,)),
    dict(replications=100, sample_sizes=(1,)),
    dict(replications=100, sample_sizes=()),
    dict(replications=100, sample_sizes=(20,), alpha_levels=(0.0,)),
    dict(replications=100, sample_sizes=(20,), alpha_levels=(1.0,)),
    dict(replications=100, sample_sizes=(20,), tuning_grid=(0.0,)),
    dict(replications=100, sample_sizes=(20,), statistics=()),
    dict(replications=100, sample_sizes=(20,), statistics=("ks",)),
])
def test_invalid_plans(kwargs):
    with pytest.raises(InvalidPlanError):
        SimulationPlan(**kwargs)


def test_plan_cells_expand_tuning_grid():
    plan = SimulationPlan(100, (20,), tuning_grid=(0.5, 1.0), statistics=("g1", "g2", "bcmr", StatisticId("hjg", 2.5)))
    labels = [c.label for c in plan.cells()]
    assert labels == ["g1[0.5]", "g1[1]", "g2[0.5]", "g2[1]", "bcmr", "hjg[2.5]"]


def test_worker_count_respects_env(monkeypatch):
    monkeypatch.setenv("ZBTEST_THREADS", "3")
    assert worker_count(16) == 3
    assert worker_count(1) == 1
    monkeypatch.setenv("ZBTEST_THREADS", "many")
    with pytest.raises(InvalidArgumentError):
        worker_count()


# critical values

@pytest.fixture(scope="module")
def small_table():
    plan = SimulationPlan(2500, (20, 50), tuning_grid=(0.5, 1.0), alpha_levels=(0.1, 0.05, 0.01),
                          statistics=("g1", "g2", "bhep", "hjg", "bcmr"), master_seed=7)
    return plan, simulate_critical_values(plan, workers=1)


@pytest.mark.parametrize("workers", [2, 4, 16])
def test_tables_identical_across_worker_counts(small_table, workers):
    plan, ref = small_table
    assert simulate_critical_values(plan, workers=workers).to_csv() == ref.to_csv()


def test_env_cap_does_not_change_results(small_table, monkeypatch):
    plan, ref = small_table
    monkeypatch.setenv("ZBTEST_THREADS", "2")
    assert simulate_critical_values(plan).to_csv() == ref.to_csv()


def test_seed_changes_table(small_table):
    plan, ref = small_table
    other = SimulationPlan(plan.replications, plan.sample_sizes, plan.tuning_grid, plan.alpha_levels,
                           plan.statistics, master_seed=8)
    assert simulate_critical_values(other).entries != ref.entries


def test_quantiles_monotone_in_alpha(small_table):
    _, table = small_table
    groups = {}
    for (s, p, n, al), q in table.entries.items():
        groups.setdefault((s, p, n), []).append((al, q))
    for cells in groups.values():
        qs = [q for _, q in sorted(cells, reverse=True)]  # alpha decreasing
        assert qs == sorted(qs)


def test_bundled_table_monotone_and_positive(bundled):
    groups = {}
    for (s, p, n, al), q in bundled.entries.items():
        if s != "bcmr":
            assert q > 0
        groups.setdefault((s, p, n), []).append((al, q))
    for cells in groups.values():
        qs = [q for _, q in sorted(cells, reverse=True)]
        assert qs == sorted(qs)
    assert bundled.replications == 100_000 and bundled.seed == 20240917


def test_table_matches_direct_quantiles(small_table):
    plan, table = small_table
    null = simulate_null(plan, 20)
    st_ = StatisticId("g2", 1.0)
    assert table.lookup("g2", 1.0, 20, 0.05) == empirical_quantile(null[st_], 0.95)


def test_null_values_kept_on_request():
    plan = SimulationPlan(300, (20,), statistics=("g2",), keep_null_values=True)
    table = simulate_critical_values(plan)
    vals = table.null_values[("g2", 1.0, 20)]
    assert vals.size == 300 and np.all(np.diff(vals) >= 0)


def test_common_samples_across_statistics():
    # adding a statistic must not change the values of the others
    a = simulate_null(SimulationPlan(1500, (20,), statistics=("g2",)), 20)
    b = simulate_null(SimulationPlan(1500, (20,), statistics=("g1", "g2", "bcmr")), 20)
    key = StatisticId("g2", 1.0)
    assert np.array_equal(a[key], b[key])


def test_prefix_replications_share_blocks():
    a = simulate_null(SimulationPlan(BLOCK, (20,), statistics=("g2",)), 20)
    b = simulate_null(SimulationPlan(BLOCK + 500, (20,), statistics=("g2",)), 20)
    key = StatisticId("g2", 1.0)
    assert np.array_equal(a[key], b[key][:BLOCK])


@pytest.mark.parametrize("n, a, alpha, printed", [(20, 1.0, 0.05, 0.609)])
def test_g1_quantile_example(n, a, alpha, printed):
    plan = SimulationPlan(20_000, (n,), tuning_grid=(a,), alpha_levels=(alpha,), statistics=("g1",), master_seed=1)
    assert simulate_critical_values(plan).lookup("g1", a, n, alpha) == pytest.approx(printed, abs=0.03)


def test_g2_quantile_example():
    plan = SimulationPlan(20_000, (50,), tuning_grid=(0.5,), alpha_levels=(0.01,), statistics=("g2",), master_seed=1)
    assert simulate_critical_values(plan).lookup("g2", 0.5, 50, 0.01) == pytest.approx(0.652, abs=0.03)


# serialization

def test_csv_roundtrip_is_exact(small_table, tmp_path):
    _, table = small_table
    back = CriticalValueTable.from_csv(table.to_csv())
    assert back == table
    assert back.to_csv() == table.to_csv()
    table.write(tmp_path / "t.csv")
    assert CriticalValueTable.read(tmp_path / "t.csv") == table


def test_json_roundtrip_is_exact(small_table, tmp_path):
    _, table = small_table
    assert CriticalValueTable.from_json(table.to_json()) == table
    table.write(tmp_path / "t.json")
    assert CriticalValueTable.read(tmp_path / "t.json") == table


def test_csv_header(small_table):
    _, table = small_table
    assert table.to_csv().splitlines()[0] == "statistic,a,n,alpha,quantile,replications,seed"


@settings(max_examples=50)
@given(st.dictionaries(
    st.tuples(st.sampled_from(["g1", "g2"]), st.floats(0.05, 5), st.integers(2, 1000), st.sampled_from([0.1, 0.05, 0.01])),
    st.floats(1e-12, 1e6), min_size=1, max_size=20))
def test_roundtrip_arbitrary_tables(entries):
    t = CriticalValueTable(entries, 1234, 99)
    assert CriticalValueTable.from_csv(t.to_csv()) == t
    assert CriticalValueTable.from_json(t.to_json()) == t


def test_power_table_roundtrip(tmp_path):
    t = PowerTable({("t(3)", "g1", 3.0, 100): 0.8123, ("uniform", "bcmr", None, 50): 0.0}, 10_000, 5, 0.05)
    assert PowerTable.from_csv(t.to_csv()) == t
    assert PowerTable.from_json(t.to_json()) == t
    assert t.to_csv().splitlines()[0] == "alternative,statistic,param,n,rate,replications,seed"


def test_power_rates_must_be_probabilities():
    with pytest.raises(InvalidArgumentError):
        PowerTable({("uniform", "g1", 1.0, 20): 1.5})


def test_table_rejects_nonpositive_entries():
    with pytest.raises(InvalidArgumentError):
        CriticalValueTable({("g1", 1.0, 20, 0.05): 0.0})
    CriticalValueTable({("bcmr", None, 20, 0.1): -0.01})  # signed statistic


def test_bad_csv_header():
    with pytest.raises(InvalidArgumentError):
        CriticalValueTable.from_csv("stat,a\n")


# missing cells

def test_missing_value_names_closest_cell(bundled):
    with pytest.raises(MissingCriticalValueError) as info:
        bundled.lookup("g2", 1.0, 60, 0.05)
    assert info.value.closest == (1.0, 50)
    assert "n=60" in str(info.value) and "n=50" in str(info.value)


def test_power_fails_before_simulating(bundled, monkeypatch):
    calls = []
    monkeypatch.setattr(montecarlo, "_simulate", lambda *a, **k: calls.append(1))
    plan = SimulationPlan(1000, (20, 33), statistics=("g2",))
    with pytest.raises(MissingCriticalValueError, match="n=33"):
        simulate_power(plan, ["uniform"], bundled)
    assert calls == []
    assert missing_cells(plan, bundled) == [("g2", 1.0, 33, 0.05)]


# degenerate samples

def test_degenerate_rows_are_redrawn(monkeypatch, caplog):
    real = montecarlo.draw_alternative
    calls = []

    def fake(spec, size, rng):
        x = real(spec, size, rng)
        if not calls:
            x[3] = 1.0
            x[7] = 2.5
        calls.append(size)
        return x

    monkeypatch.setattr(montecarlo, "draw_alternative", fake)
    spec = parse_spec("uniform")
    with caplog.at_level("INFO", logger="zbtest.montecarlo"):
        y, redrawn = montecarlo._draw_block(montecarlo.RandomStream(3), 11, 20, 0, 50, spec)
    assert redrawn == 2 and len(calls) == 2
    assert np.all(np.isfinite(y))
    assert "re-drew 2 degenerate samples" in caplog.text


# level and power

@pytest.fixture(scope="module")
def level_run(bundled):
    stats = [StatisticId("g1", a) for a in montecarlo.STANDARD_TUNING_GRID]
    stats += [StatisticId("g2", a) for a in montecarlo.STANDARD_TUNING_GRID]
    stats += [StatisticId("bhep", 1.0), StatisticId("hjg", 5.0), StatisticId("bcmr")]
    plan = SimulationPlan(10_000, (50,), statistics=tuple(stats), master_seed=424242)
    return simulate_power(plan, ["normal(0,1)"], bundled)


def test_level_accuracy_at_n50(level_run):
    se = math.sqrt(0.05 * 0.95 / 10_000)
    for key, rate in level_run.entries.items():
        assert abs(rate - 0.05) <= max(0.005, 3 * se), key


def test_null_rates_within_band(level_run):
    for rate in level_run.entries.values():
        assert 0.04 <= rate <= 0.06


def test_t3_power_g1_a3(bundled):
    plan = SimulationPlan(10_000, (100,), tuning_grid=(3.0,), statistics=("g1",), master_seed=5)
    rate = simulate_power(plan, ["t(3)"], bundled).rate("t(3)", "g1", 3.0, 100)
    assert rate == pytest.approx(0.81, abs=0.03)


def test_uniform_hjg_has_no_power(bundled):
    stats = tuple(StatisticId("hjg", b) for b in (2.5, 5.0, 10.0))
    plan = SimulationPlan(10_000, (100,), statistics=stats, master_seed=5)
    table = simulate_power(plan, ["uniform"], bundled)
    assert all(r <= 0.01 for r in table.entries.values())


def test_power_deterministic_across_workers(bundled):
    plan = SimulationPlan(3000, (20,), statistics=("g2", "bcmr"), master_seed=9)
    a = simulate_power(plan, ["chisq(5)", "uniform"], bundled, workers=1)
    b = simulate_power(plan, ["chisq(5)", "uniform"], bundled, workers=8)
    assert a.to_csv() == b.to_csv()
