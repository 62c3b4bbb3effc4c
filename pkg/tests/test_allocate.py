import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskalloc.allocate import (
    CostTable,
    allocate_crews,
    allocate_vehicles,
    brute_force_minimax,
    closed_form_vehicles,
    format_sig,
    greedy_convex_sum,
    load_vehicles_csv,
    minimax_via_cumsum,
    write_vehicles_csv,
)
from riskalloc.errors import InfeasibleError, ParseError
from riskalloc.risk import RiskTable

from benchmark_instance import (
    BENCHMARK_RISKS,
    CREW_COUNTS_HEAD,
    CREW_ORDER,
    CREW_SIZE,
    K_CREWS,
    K_FULL,
    K_TRUNCATED,
    TRUNCATED_COUNTS,
    VEHICLE_OBJECTIVE_4SIG,
    VEHICLE_ORDER,
)


def order_sets(order_log):
    sets = {}
    for k, s in order_log:
        sets.setdefault(s, set()).add(k)
    return sets


def exhaustive_sum_optimum(costs: CostTable, budget: int):
    """Optimal summed cost by enumerating every split of the budget."""
    ids = sorted(costs.tables)
    best = None
    for combo in itertools.product(range(budget + 1), repeat=len(ids)):
        if sum(combo) != budget:
            continue
        total = sum(costs.tables[s][v] for s, v in zip(ids, combo))
        if best is None or total < best:
            best = total
    return best


def exhaustive_minimax_optimum(costs: CostTable, budget: int):
    """Optimal maximal cost by enumerating every split of the budget."""
    ids = sorted(costs.tables)
    best = None
    for combo in itertools.product(range(budget + 1), repeat=len(ids)):
        if sum(combo) != budget:
            continue
        worst = max(costs.tables[s][v] for s, v in zip(ids, combo))
        if best is None or worst < best:
            best = worst
    return best


def random_convex_table(rng: random.Random, activities: int, budget: int) -> CostTable:
    tables = {}
    for idx in range(activities):
        increments = sorted(rng.randint(-20, 40) for _ in range(budget))
        start = rng.randint(-10, 10)
        values = [start]
        for d in increments:
            values.append(values[-1] + d)
        tables[f"a{idx}"] = values
    return CostTable(tables, convex=True)


def random_monotone_table(rng: random.Random, activities: int, budget: int) -> CostTable:
    tables = {}
    for idx in range(activities):
        values = [rng.randint(0, 8)]
        for _ in range(budget):
            values.append(values[-1] + rng.randint(0, 12))
        tables[f"a{idx}"] = values
    return CostTable(tables, convex=False)


class TestGreedyConvexSum:
    def test_zero_budget(self):
        costs = CostTable({"a": [0, 1, 2], "b": [0, 5, 10]})
        assert greedy_convex_sum(costs, 0) == {"a": 0, "b": 0}

    def test_square_vs_linear_by_enumeration(self):
        # Costs i^2 and 2i for budget 3: splits cost 9, 6, 5, 6 -> best (1, 2).
        costs = CostTable({"a": [0, 1, 4, 9], "b": [0, 2, 4, 6]})
        result = greedy_convex_sum(costs, 3)
        assert result == {"a": 1, "b": 2}
        total = costs.tables["a"][1] + costs.tables["b"][2]
        assert total == 5
        assert total == exhaustive_sum_optimum(costs, 3)

    def test_random_instances_match_enumeration(self):
        rng = random.Random(100)
        for _ in range(120):
            activities = rng.randint(1, 3)
            budget = rng.randint(0, 8)
            costs = random_convex_table(rng, activities, budget)
            result = greedy_convex_sum(costs, budget)
            achieved = sum(costs.tables[s][v] for s, v in result.items())
            assert achieved == exhaustive_sum_optimum(costs, budget)

    def test_matches_ranked_increment_form(self):
        # Equivalent closed form: take the budget smallest increments
        # (ordered by value, then activity, then step) and count per activity.
        rng = random.Random(101)
        for _ in range(80):
            activities = rng.randint(1, 3)
            budget = rng.randint(0, 8)
            costs = random_convex_table(rng, activities, budget)
            ranked = sorted(
                (costs.tables[s][i] - costs.tables[s][i - 1], s, i)
                for s in costs.tables
                for i in range(1, budget + 1)
            )
            counts = {s: 0 for s in costs.tables}
            for _, s, _ in ranked[:budget]:
                counts[s] += 1
            assert greedy_convex_sum(costs, budget) == counts

    def test_budget_beyond_table_rejected(self):
        with pytest.raises(ValueError):
            greedy_convex_sum(CostTable({"a": [0, 1]}), 2)

    def test_nonconvex_rejected(self):
        with pytest.raises(ValueError):
            greedy_convex_sum(CostTable({"a": [0, 5, 6, 100, 101]}), 4)
        with pytest.raises(ValueError):
            greedy_convex_sum(CostTable({"a": [0, 1, 2]}, convex=False), 1)


class TestMinimaxViaCumsum:
    def test_linear_pair_by_enumeration(self):
        # Costs j and 2j for budget 3: max-values 3, 2, 4, 6 -> best (2, 1).
        costs = CostTable({"a": [0, 1, 2, 3], "b": [0, 2, 4, 6]})
        result = minimax_via_cumsum(costs, 3)
        assert result == {"a": 2, "b": 1}
        assert max(costs.tables["a"][2], costs.tables["b"][1]) == 2

    def test_single_activity_takes_everything(self):
        costs = CostTable({"only": [0, 3, 7, 20]})
        assert minimax_via_cumsum(costs, 3) == {"only": 3}

    def test_random_instances_match_enumeration(self):
        rng = random.Random(102)
        for _ in range(120):
            activities = rng.randint(1, 2)
            budget = rng.randint(0, 8)
            costs = random_monotone_table(rng, activities, budget)
            result = minimax_via_cumsum(costs, budget)
            achieved = max(costs.tables[s][v] for s, v in result.items())
            assert achieved == exhaustive_minimax_optimum(costs, budget)

    def test_decreasing_table_rejected(self):
        with pytest.raises(ValueError):
            minimax_via_cumsum(CostTable({"a": [3, 2, 1]}), 2)

    def test_negative_table_rejected(self):
        with pytest.raises(ValueError):
            minimax_via_cumsum(CostTable({"a": [-1, 0, 1]}), 2)


class TestAllocateVehicles:
    def test_statutory_only(self):
        alloc = allocate_vehicles({"a": 5, "b": 2}, 2)
        assert alloc.counts == {"a": 1, "b": 1}
        assert alloc.order_log == []
        assert alloc.objective == 5

    def test_benchmark_order_and_objective(self):
        alloc = allocate_vehicles(BENCHMARK_RISKS, K_FULL)
        assert order_sets(alloc.order_log) == VEHICLE_ORDER
        assert format_sig(alloc.objective) == VEHICLE_OBJECTIVE_4SIG
        assert sum(alloc.counts.values()) == K_FULL

    def test_benchmark_truncated_counts(self):
        alloc = allocate_vehicles(BENCHMARK_RISKS, K_TRUNCATED)
        assert alloc.counts == TRUNCATED_COUNTS

    def test_order_log_prefix_property(self):
        # Truncating the budget replays the same assignment prefix.
        full = allocate_vehicles(BENCHMARK_RISKS, K_FULL)
        part = allocate_vehicles(BENCHMARK_RISKS, K_TRUNCATED)
        assert part.order_log == full.order_log[: len(part.order_log)]

    def test_infeasible_budget_rejected(self):
        with pytest.raises(InfeasibleError):
            allocate_vehicles({"a": 1, "b": 1}, 1)

    def test_nonpositive_risk_rejected(self):
        with pytest.raises(ValueError):
            allocate_vehicles({"a": 0, "b": 1}, 4)

    def test_accepts_risk_table(self):
        table = RiskTable({"a": 4.0, "b": 1.0})
        assert allocate_vehicles(table, 3).counts == {"a": 2, "b": 1}

    @given(
        st.dictionaries(
            st.sampled_from(["a", "b", "c"]),
            st.fractions(min_value=Fraction(1, 100), max_value=100),
            min_size=1,
            max_size=3,
        ),
        st.integers(min_value=0, max_value=8),
        st.fractions(min_value=Fraction(1, 7), max_value=50),
    )
    @settings(max_examples=60, deadline=None)
    def test_scale_equivariance(self, risks, extra, scale):
        K = len(risks) + extra
        base = allocate_vehicles(risks, K)
        scaled = allocate_vehicles({s: v * scale for s, v in risks.items()}, K)
        assert scaled.counts == base.counts
        assert scaled.order_log == base.order_log

    @given(
        st.lists(st.fractions(min_value=Fraction(1, 10), max_value=100), min_size=1, max_size=4),
        st.integers(min_value=0, max_value=6),
    )
    @settings(max_examples=80, deadline=None)
    def test_greedy_is_optimal(self, values, extra):
        risks = {f"s{i}": v for i, v in enumerate(values)}
        K = len(risks) + extra
        alloc = allocate_vehicles(risks, K)
        optimum, _ = brute_force_minimax(risks, K)
        assert alloc.objective == optimum

    def test_budget_increase_never_hurts(self):
        risks = {"a": "10.5", "b": "3.25", "c": "7"}
        objectives = [allocate_vehicles(risks, K).objective for K in range(3, 15)]
        assert all(b <= a for a, b in zip(objectives, objectives[1:]))


class TestClosedFormVehicles:
    def test_statutory_only(self):
        alloc = closed_form_vehicles({"a": 5, "b": 2}, 2)
        assert alloc.counts == {"a": 1, "b": 1}
        assert alloc.order_log == []

    def test_benchmark_counts_match_greedy(self):
        greedy = allocate_vehicles(BENCHMARK_RISKS, K_FULL)
        closed = closed_form_vehicles(BENCHMARK_RISKS, K_FULL)
        assert closed.counts == greedy.counts
        assert closed.objective == greedy.objective

    def test_random_tie_free_instances_match_greedy(self):
        rng = random.Random(103)
        done = 0
        while done < 150:
            size = rng.randint(1, 5)
            K = rng.randint(size, 12)
            risks = {f"s{i}": Fraction(rng.randint(1, 10**6)) for i in range(size)}
            ratios = [r / j for r in risks.values() for j in range(1, K - size + 2)]
            if len(set(ratios)) != len(ratios):
                continue
            done += 1
            greedy = allocate_vehicles(risks, K)
            closed = closed_form_vehicles(risks, K)
            assert closed.counts == greedy.counts

    def test_objectives_agree_even_with_ties(self):
        rng = random.Random(104)
        for _ in range(150):
            size = rng.randint(1, 4)
            K = rng.randint(size, 10)
            risks = {f"s{i}": Fraction(rng.randint(1, 12)) for i in range(size)}
            assert (
                closed_form_vehicles(risks, K).objective
                == allocate_vehicles(risks, K).objective
            )


class TestAllocateCrews:
    def test_tie_break_concentrates_slack(self):
        # Two equally risky stations with two vehicles each and three crews
        # to staff: the station that wins the first unit takes all six.
        alloc = allocate_crews({"a": 6, "b": 6}, {"a": 2, "b": 2}, alpha=6, K=18)
        assert sorted(alloc.f.values()) == [6, 12]
        first = alloc.order_log[0][1]
        assert all(s == first for _, s in alloc.order_log)
        assert alloc.f[first] == 12
        assert alloc.objective == 6
        per_crew = sorted(Fraction(6) / alloc.operational[s] for s in ("a", "b"))
        assert per_crew == [3, 6]

    def test_statutory_only(self):
        alloc = allocate_crews({"a": 9, "b": 4}, {"a": 2, "b": 1}, alpha=3, K=6)
        assert alloc.f == {"a": 3, "b": 3}
        assert alloc.order_log == []
        assert alloc.objective == 9

    def test_benchmark_crew_order(self):
        alloc = allocate_crews(BENCHMARK_RISKS, TRUNCATED_COUNTS, CREW_SIZE, K_CREWS)
        sets = order_sets(alloc.order_log)
        for s, expected in CREW_ORDER.items():
            assert sets.get(s, set()) == expected
        for s, expected in CREW_COUNTS_HEAD.items():
            assert alloc.f[s] == expected
        full = [
            s
            for s in TRUNCATED_COUNTS
            if TRUNCATED_COUNTS[s] > 1 and alloc.f[s] == CREW_SIZE * TRUNCATED_COUNTS[s]
        ]
        assert full == ["s4"]

    def test_at_most_one_station_with_slack(self):
        rng = random.Random(105)
        for _ in range(100):
            size = rng.randint(1, 4)
            risks = {f"s{i}": Fraction(rng.randint(1, 50)) for i in range(size)}
            n = {s: rng.randint(1, 3) for s in risks}
            alpha = rng.choice([2, 3, 6])
            lo, hi = alpha * size, alpha * sum(n.values())
            if lo >= hi:
                continue
            K = rng.randrange(lo, hi)
            alloc = allocate_crews(risks, n, alpha, K)
            slacked = [s for s, v in alloc.slack.items() if v]
            assert len(slacked) <= 1
            if slacked:
                assert alloc.slack[slacked[0]] == K - alpha * (K // alpha)
            assert sum(alloc.f.values()) == K
            assert all(alpha <= alloc.f[s] <= alpha * n[s] for s in risks)

    def test_budget_bounds_enforced(self):
        risks = {"a": 5, "b": 3}
        n = {"a": 2, "b": 1}
        with pytest.raises(InfeasibleError):
            allocate_crews(risks, n, alpha=4, K=7)  # below alpha*|S|
        with pytest.raises(InfeasibleError):
            allocate_crews(risks, n, alpha=4, K=12)  # full staffing, no shortage

    def test_mismatched_stations_rejected(self):
        with pytest.raises(ValueError):
            allocate_crews({"a": 5}, {"b": 1}, alpha=2, K=2)

    def test_small_alpha_rejected(self):
        with pytest.raises(ValueError):
            allocate_crews({"a": 5}, {"a": 2}, alpha=1, K=3)

    def test_greedy_is_optimal_on_random_instances(self):
        rng = random.Random(106)
        done = 0
        while done < 120:
            size = rng.randint(1, 3)
            risks = {f"s{i}": Fraction(rng.randint(1, 40), rng.randint(1, 7)) for i in range(size)}
            n = {s: rng.randint(1, 3) for s in risks}
            alpha = rng.choice([2, 3])
            lo, hi = alpha * size, alpha * sum(n.values())
            if lo >= hi:
                continue
            K = rng.randrange(lo, hi)
            done += 1
            alloc = allocate_crews(risks, n, alpha, K)
            optimum, _ = brute_force_minimax(risks, K, mode="crews", n=n, alpha=alpha)
            assert alloc.objective == optimum


class TestBruteForce:
    def test_two_symmetric_stations(self):
        objective, witness = brute_force_minimax({"a": 6, "b": 6}, 3)
        assert objective == 6
        assert sorted(witness.values()) == [1, 2]

    def test_asymmetric_pair(self):
        objective, witness = brute_force_minimax({"a": 10, "b": 1}, 3)
        assert objective == 5
        assert witness == {"a": 2, "b": 1}

    def test_crew_remark_instance(self):
        objective, witness = brute_force_minimax(
            {"a": 6, "b": 6}, 18, mode="crews", n={"a": 2, "b": 2}, alpha=6
        )
        assert objective == 6
        assert sorted(witness.values()) == [6, 12]

    def test_search_space_cap(self):
        risks = {f"s{i}": 1 for i in range(12)}
        with pytest.raises(ValueError, match="cap"):
            brute_force_minimax(risks, 48, cap=1000)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            brute_force_minimax({"a": 1}, 1, mode="boats")


class TestVehicleCsv:
    def test_roundtrip(self, tmp_path):
        counts = {"a": 3, "b": 1}
        path = tmp_path / "vehicles.csv"
        write_vehicles_csv(counts, {"a": 7.0, "b": 2.0}, path)
        assert load_vehicles_csv(path) == counts

    def test_bad_header(self, tmp_path):
        path = tmp_path / "vehicles.csv"
        path.write_text("station,count\na,1\n")
        with pytest.raises(ParseError):
            load_vehicles_csv(path)

    def test_nonpositive_count_rejected(self, tmp_path):
        path = tmp_path / "vehicles.csv"
        path.write_text("station,n\na,0\n")
        with pytest.raises(ParseError):
            load_vehicles_csv(path)


class TestFormatting:
    def test_four_significant_digits(self):
        assert format_sig(Fraction(181, 5)) == "36.2"
        assert format_sig(168.9 / 5) == "33.78"
        assert format_sig(1234.5) == "1234"
