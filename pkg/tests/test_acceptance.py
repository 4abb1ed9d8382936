"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criterion 5 is asserted exactly as stated and is expected to FAIL: the
bound it demands is asymptotic in the item count and is provably not yet in
force at k=40 (see the assertion message, which carries the closed-form
expectation).  Every other criterion passes at its stated tolerance.
"""

import json
import math
import time

import numpy as np
import pytest

from evcg_reserves import cli
from evcg_reserves.auction import (
    ReserveGrid,
    batch_evaluator,
    kth_plus_one_bid,
    revenue,
    zero_reserves,
)
from evcg_reserves.baselines import (
    BadExampleSpec,
    bad_example,
    bad_example_fractional,
    bad_example_optimal_vectors,
    brute_force_opt,
)
from evcg_reserves.bounds import (
    bernoulli_tail_lower,
    binomial_tail_integral,
    chernoff_tail_check,
    poisson_binomial_tail,
    table1_lower,
    table2_lower,
    table3_lower,
)
from evcg_reserves.lp_model import build_lp, encode_reserves, solve_lp
from evcg_reserves.probes import make_probe_context, payment_thresholds, probe_phi
from evcg_reserves.rounding import (
    DISCOUNTED_STREAM,
    INFLATED_STREAM,
    RoundingParams,
    masses_matrix,
    sample_matrix,
    simple_rounding_matrix,
    split_distributions,
)

from .conftest import desk_instances
from .printed_tables import PRINTED_TABLE1, PRINTED_TABLE2, PRINTED_TABLE3, truncates_to

BOOST = 0.55
INSTANCE_SEED = 20260810


def report_line(criterion: int, ok: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def solved_instances():
    """The 100 random desk-scale instances, solved once and shared."""
    out = []
    for ds in desk_instances(100, seed=INSTANCE_SEED):
        grid = ReserveGrid.from_dataset(ds)
        instance = build_lp(ds, grid)
        solution = solve_lp(instance)
        _, brute_rev = brute_force_opt(ds, grid)
        out.append({"ds": ds, "grid": grid, "instance": instance,
                    "solution": solution, "brute": brute_rev})
    return out


def test_criterion_1_worst_case_identities():
    started = time.perf_counter()
    for k in range(2, 41):
        spec = BadExampleSpec(k=k)
        ds = bad_example(spec)
        high, ones = bad_example_optimal_vectors(spec)
        assert revenue(ds, high) == 2 * k**3 + k**2, k
        assert revenue(ds, zero_reserves(ds)) == k**3 + k**2, k
        assert revenue(ds, ones) == 2 * k**3 + k**2 + k, k
    elapsed = time.perf_counter() - started
    report_line(1, True, f"identities exact for k=2..40 ({elapsed:.2f}s)")
    assert elapsed < 1.0


def test_criterion_2_lp_upper_bound(solved_instances):
    started = time.perf_counter()
    worst = float("inf")
    for case in solved_instances:
        slack = case["solution"].objective - case["brute"]
        worst = min(worst, slack)
        assert slack >= -1e-6
    elapsed = time.perf_counter() - started
    report_line(2, True,
                f"lp >= brute force - 1e-6 on 100 instances, min slack "
                f"{worst:.2e} ({elapsed:.2f}s)")
    assert elapsed < 120.0


def test_criterion_3_encoding_soundness(solved_instances):
    started = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(INSTANCE_SEED + 1)))
    checked = 0
    worst_violation = 0.0
    for case in solved_instances:
        ds, grid, instance = case["ds"], case["grid"], case["instance"]
        for _ in range(2):
            res = tuple(int(rng.choice(grid.values)) for _ in range(ds.num_real_buyers))
            res += (0,) * (ds.num_items + 1)
            point = encode_reserves(ds, grid, res)
            violation = instance.violation(instance.embed(point))
            worst_violation = max(worst_violation, violation)
            assert violation <= 1e-7
            assert point.objective == revenue(ds, res)
            assert instance.exact_objective(point) == revenue(ds, res)
            checked += 1
    elapsed = time.perf_counter() - started
    report_line(3, True,
                f"{checked} encoded points feasible (max violation "
                f"{worst_violation:.1e}) with exact objectives ({elapsed:.2f}s)")
    assert checked == 200 and elapsed < 60.0


def test_criterion_4_approximation_property(solved_instances):
    started = time.perf_counter()
    num_samples = 1000
    min_margin = float("inf")
    for i, case in enumerate(solved_instances):
        ds, grid, solution = case["ds"], case["grid"], case["solution"]
        evaluator = batch_evaluator(ds)
        x = masses_matrix(solution.x_masses, grid, ds.num_buyers)
        splits = split_distributions(x, grid, RoundingParams(boost=BOOST))
        seed = INSTANCE_SEED + 100 + i
        disc = sample_matrix(splits.discounted, grid.values, seed,
                             DISCOUNTED_STREAM, num_samples)
        infl = sample_matrix(splits.inflated, grid.values, seed,
                             INFLATED_STREAM, num_samples)
        rev_disc = evaluator.revenues(disc).astype(float)
        rev_infl = evaluator.revenues(infl).astype(float)
        rev_zero = float(evaluator.revenues(
            np.array([zero_reserves(ds)], dtype=np.int64))[0])
        se = max(rev_disc.std(ddof=1), rev_infl.std(ddof=1)) / math.sqrt(num_samples)
        achieved = max(rev_disc.mean(), rev_infl.mean(), rev_zero)
        threshold = 0.63 * solution.objective - 3.0 * se
        min_margin = min(min_margin, achieved - threshold)
        assert achieved >= threshold, (i, achieved, solution.objective, se)
    elapsed = time.perf_counter() - started
    report_line(4, True,
                f"best of three means >= 0.63*lp - 3se on 100 instances, "
                f"min margin {min_margin:.3f} ({elapsed:.2f}s)")
    assert elapsed < 300.0


def exact_simple_rounding_expectation(k: int, d: float) -> float:
    """Closed-form expected revenue of one-shot rounding on the worst case.

    Column 1 always pays k^3.  Column 2's winners pay their own reserves.
    Column 3 pays k^2 per copy when every tail buyer clears (probability
    (1-d)^k), else reserves only; column 4 pays 1 per cleared buyer capped
    at k winners.
    """
    a1 = float(k**3)
    a2 = k * (d * k**2 + (1 - d))
    p_all = (1 - d) ** k
    e_r_b2 = d * k + (1 - d)
    e_tail_not_all = k * (1 - d) - k * p_all
    a3 = k * (p_all * k * k + (1 - p_all) * e_r_b2 + e_tail_not_all)
    n = k + 1
    e_col4 = sum(
        math.comb(n, j) * (1 - d) ** j * d ** (n - j) * min(j, k)
        for j in range(n + 1)
    )
    a4 = k * e_col4
    return a1 + a2 + a3 + a4


def test_criterion_5_simple_rounding_failure():
    started = time.perf_counter()
    k, d = 40, 0.025
    spec = BadExampleSpec(k=k, delta=d)
    ds = bad_example(spec)
    grid = ReserveGrid.from_dataset(ds)
    point = bad_example_fractional(spec)
    draws = simple_rounding_matrix(ds, point.x, grid, seed=INSTANCE_SEED,
                                   num_samples=10_000)
    mean = float(batch_evaluator(ds).revenues(draws).mean())
    opt_ref = 2 * k**3 + k**2
    threshold = 0.55 * opt_ref
    exact = exact_simple_rounding_expectation(k, d)
    elapsed = time.perf_counter() - started
    ok = mean <= threshold
    report_line(5, ok,
                f"monte-carlo mean {mean:.1f} vs threshold {threshold:.1f} "
                f"(ratio {mean / opt_ref:.4f}, exact expectation {exact:.1f}, "
                f"{elapsed:.2f}s)")
    assert elapsed < 60.0
    assert ok, (
        f"Criterion as stated is unattainable at k={k}, delta={d}: the exact "
        f"expected one-shot-rounding revenue is {exact:.1f} = "
        f"{exact / opt_ref:.4f} * (2k^3+k^2), far above the 0.55 threshold "
        f"{threshold:.1f}; the sample mean {mean:.1f} agrees. The bound is "
        f"asymptotic in k: it needs (1-delta)^k * k^3 to vanish, but "
        f"(1-{d})^{k} = {(1 - d) ** k:.4f} keeps column 3's all-clear slab "
        f"worth {(1 - d) ** k * k**3:.0f}. No delta rescues k=40 (the ratio "
        f"floor over delta is ~0.587); k=150 satisfies the bound, see "
        f"test_simple_rounding_gap_emerges_at_large_k. Full analysis in the "
        f"decisions ledger."
    )


def test_simple_rounding_gap_emerges_at_large_k():
    """The same bound holds once k is large enough for the asymptotics."""
    k, d = 150, 0.025
    spec = BadExampleSpec(k=k, delta=d)
    ds = bad_example(spec)
    grid = ReserveGrid.from_dataset(ds)
    point = bad_example_fractional(spec)
    draws = simple_rounding_matrix(ds, point.x, grid, seed=INSTANCE_SEED,
                                   num_samples=2000)
    revs = batch_evaluator(ds).revenues(draws).astype(float)
    opt_ref = 2 * k**3 + k**2
    se = revs.std(ddof=1) / math.sqrt(len(revs))
    assert revs.mean() + 3 * se <= 0.55 * opt_ref
    assert exact_simple_rounding_expectation(k, d) <= 0.55 * opt_ref


def test_criterion_6_table_reproduction():
    started = time.perf_counter()
    for (y, x), printed in PRINTED_TABLE1.items():
        value = table1_lower(y, x)
        if printed is None:
            assert value is None, (y, x)
        else:
            assert value is not None and truncates_to(value, printed), (y, x, value)
    for alpha, printed in PRINTED_TABLE2.items():
        assert truncates_to(table2_lower(alpha), printed), alpha
    for y, printed in PRINTED_TABLE3.items():
        assert abs(table3_lower(y) - float(printed)) <= 0.005, y
    # spot values at the stated tolerances
    assert abs(table1_lower(1.5, 0.6) - 0.697) <= 0.005
    assert 0.72 <= table2_lower(1.0) <= 0.73
    assert abs(table3_lower(1.5) - 0.68) <= 0.005
    elapsed = time.perf_counter() - started
    report_line(6, True,
                f"all 39 printed entries reproduced at printed precision, "
                f"dashes map to invalid ({elapsed:.2f}s)")
    assert elapsed < 30.0


def test_criterion_7_tail_lemmas():
    started = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(INSTANCE_SEED + 2)))
    checked = 0
    while checked < 1000:
        n = int(rng.integers(4, 40))
        means = rng.random(n)
        mu = float(means.sum())
        m = int(mu) - 2
        if m < 0 or m + 1 >= mu:
            continue
        assert poisson_binomial_tail(means, m) >= bernoulli_tail_lower(m, mu) - 1e-12
        checked += 1

    def direct(n, m, p):
        return math.fsum(math.comb(n, j) * p**j * (1 - p) ** (n - j)
                         for j in range(m, n + 1))

    grid_checked = 0
    for n in range(1, 51):
        for m in range(1, n + 1, max(1, n // 5)):
            for p in (0.2, 0.5, 0.8):
                assert abs(binomial_tail_integral(n, m, p) - direct(n, m, p)) <= 1e-9
                grid_checked += 1

    regime = chernoff_tail_check(2000, 1.05)
    assert regime >= 0.9
    elapsed = time.perf_counter() - started
    report_line(7, True,
                f"1000 tail dominations, {grid_checked} integral identities "
                f"<= 1e-9, regime tail {regime:.4f} >= 0.9 ({elapsed:.2f}s)")
    assert elapsed < 60.0


def test_criterion_8_phi_regimes(solved_instances):
    started = time.perf_counter()
    checks = 0
    worst_excess = -float("inf")
    for i, case in enumerate(solved_instances):
        ds, solution = case["ds"], case["solution"]
        k = ds.num_items
        for a in range(ds.num_auctions):
            kth = kth_plus_one_bid(ds, a)
            for tau in payment_thresholds(solution):
                ctx = make_probe_context(solution, a, tau, boost=BOOST)
                est = probe_phi(ctx, num_samples=600, seed=INSTANCE_SEED + 500 + i)
                bound = 0.0 if tau > kth else 0.58 * k
                excess = est.value - (bound + 3.0 * est.stderr)
                worst_excess = max(worst_excess, excess)
                assert excess <= 1e-9, (i, a, tau, est)
                checks += 1
    elapsed = time.perf_counter() - started
    report_line(8, True,
                f"{checks} (auction, tau) probes within 3 standard errors of "
                f"their regime bounds, worst excess {worst_excess:.2e} "
                f"({elapsed:.2f}s)")
    assert elapsed < 300.0


def test_criterion_9_byte_identical_reports(tmp_path):
    started = time.perf_counter()
    dataset = tmp_path / "ds.json"
    dataset.write_text(json.dumps({
        "num_items": 2, "scale": 0, "buyers": ["b1", "b2", "b3", "b4"],
        "auctions": [
            {"weight": 1, "bids": ["9", "5", "0", "3"]},
            {"weight": 2, "bids": ["4", "7", "2", "2"]},
            {"weight": 1, "bids": ["1", "0", "8", "6"]},
        ],
    }))
    blobs: dict[str, set[bytes]] = {"round": set(), "bench": set()}
    for command in ("round", "bench"):
        for attempt, threads in enumerate(("1", "2", "8", "1")):
            out = tmp_path / f"{command}{attempt}.json"
            code = cli.main([command, "--dataset", str(dataset), "--seed", "11",
                             "--samples", "32", "--threads", threads,
                             "--out", str(out)])
            assert code == 0
            blobs[command].add(out.read_bytes())
    ok = all(len(v) == 1 for v in blobs.values())
    elapsed = time.perf_counter() - started
    report_line(9, ok,
                f"round and bench reports byte-identical across repeats and "
                f"1/2/8 worker threads ({elapsed:.2f}s)")
    assert ok
