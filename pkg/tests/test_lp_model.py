"""Sub-profile enumeration, LP assembly/solve, and integral encoding."""

import numpy as np
import pytest

from evcg_reserves.auction import revenue, zero_reserves
from evcg_reserves.baselines import BadExampleSpec, bad_example, brute_force_opt
from evcg_reserves.errors import LpSolveError, SizeGuardError
from evcg_reserves.lp_model import (
    SubProfile,
    build_lp,
    encode_reserves,
    enumerate_subprofiles,
    solve_lp,
)

from .conftest import desk_instances, grid_of, make_dataset


class TestEnumeration:
    def test_pair_contribution(self, two_bidder_k1):
        grid = grid_of(two_bidder_k1)
        assert grid.values == (0, 5, 10)
        profs = enumerate_subprofiles(two_bidder_k1, 0, grid)
        pair = [p for p in profs if p.winner == 0 and p.supporter == 1]
        assert len(pair) == 6  # r1 in {0,5,10} x r2 in {0,5}
        assert all(p.revenue == max(5, p.winner_reserve) for p in pair)

    def test_reversed_pair_absent(self, two_bidder_k1):
        profs = enumerate_subprofiles(two_bidder_k1, 0, grid_of(two_bidder_k1))
        assert not any(p.winner == 1 and p.supporter == 0 for p in profs)

    def test_all_zero_bids_have_zero_revenue(self):
        ds = make_dataset(1, [(1, (0, 0))])
        profs = enumerate_subprofiles(ds, 0, grid_of(ds))
        assert profs and all(p.revenue == 0 for p in profs)

    def test_deterministic_order(self, three_bidder_k2):
        grid = grid_of(three_bidder_k2)
        a = enumerate_subprofiles(three_bidder_k2, 0, grid)
        b = enumerate_subprofiles(three_bidder_k2, 0, grid)
        assert a == b
        keys = [(p.winner, p.supporter, p.winner_reserve, p.supporter_reserve) for p in a]
        assert keys == sorted(keys)

    def test_validity_conditions(self, three_bidder_k2):
        bids = three_bidder_k2.auctions[0].bids
        for p in enumerate_subprofiles(three_bidder_k2, 0, grid_of(three_bidder_k2)):
            assert p.winner != p.supporter
            assert bids[p.winner] >= bids[p.supporter]
            assert p.winner_reserve <= bids[p.winner]
            assert p.supporter_reserve <= bids[p.supporter]
            assert p.revenue == max(bids[p.supporter], p.winner_reserve)

    def test_size_guard(self, three_bidder_k2):
        with pytest.raises(SizeGuardError):
            enumerate_subprofiles(three_bidder_k2, 0, grid_of(three_bidder_k2),
                                  max_subprofiles=5)


class TestBuildAndSolve:
    def test_single_buyer_optimum(self):
        ds = make_dataset(1, [(1, (10,))])
        sol = solve_lp(build_lp(ds, grid_of(ds)))
        assert sol.objective == pytest.approx(10.0, abs=1e-7)

    def test_all_zero_dataset(self):
        ds = make_dataset(1, [(1, (0, 0))])
        sol = solve_lp(build_lp(ds, grid_of(ds)))
        assert sol.objective == pytest.approx(0.0, abs=1e-9)

    def test_bad_example_lower_bound(self):
        ds = bad_example(BadExampleSpec(k=2))
        sol = solve_lp(build_lp(ds, grid_of(ds)))
        assert sol.objective >= 22 - 1e-6

    def test_three_bidder_bound(self, three_bidder_k2):
        sol = solve_lp(build_lp(three_bidder_k2, grid_of(three_bidder_k2)))
        assert sol.objective >= 18 - 1e-6  # encode (10, 8, 0, ...) pays 10 + 8

    def test_constraint_counts(self, three_bidder_k2):
        inst = build_lp(three_bidder_k2, grid_of(three_bidder_k2))
        n, R, A = 6, 4, 1
        counts = inst.constraint_counts
        assert counts["winner_link"] == counts["supporter_link"] == A * n * R
        assert counts["reserve_consistency"] == A * n * R
        assert counts["compatibility"] == A * n * n
        assert counts["per_auction_cap"] == A
        assert counts["one_reserve_each"] == 3  # aux fixed at 0
        assert inst.A_eq.shape[0] == 2 * A * n * R + counts["one_reserve_each"]
        assert inst.A_le.shape[0] == A * n * R + A * n * n + A

    def test_objective_matches_inner_product(self):
        for ds in desk_instances(10, seed=31):
            inst = build_lp(ds, grid_of(ds))
            sol = solve_lp(inst)
            recomputed = inst.objective_of(sol.vector)
            assert abs(sol.objective - recomputed) <= 1e-9 * max(1.0, abs(recomputed))

    def test_upper_bounds_brute_force(self):
        for ds in desk_instances(30, seed=37):
            grid = grid_of(ds)
            sol = solve_lp(build_lp(ds, grid))
            _, best = brute_force_opt(ds, grid)
            assert sol.objective >= best - 1e-6

    def test_per_buyer_grid_variant(self):
        for ds in desk_instances(10, seed=41):
            grid = grid_of(ds)
            full = solve_lp(build_lp(ds, grid)).objective
            restricted = solve_lp(build_lp(ds, grid, per_buyer_grid=True)).objective
            _, best = brute_force_opt(ds, grid)
            assert restricted <= full + 1e-6
            assert restricted >= best - 1e-6

    def test_iteration_limit_raises(self):
        ds = bad_example(BadExampleSpec(k=3))
        inst = build_lp(ds, grid_of(ds))
        with pytest.raises(LpSolveError):
            solve_lp(inst, max_iterations=1)


class TestEncode:
    def test_off_grid_reserve_rejected(self, two_bidder_k1):
        with pytest.raises(ValueError):
            encode_reserves(two_bidder_k1, grid_of(two_bidder_k1), (7, 0, 0, 0))

    def test_simple_point(self, two_bidder_k1):
        grid = grid_of(two_bidder_k1)
        pt = encode_reserves(two_bidder_k1, grid, (5, 0, 0, 0))
        assert pt.objective == 5
        assert pt.s[0] == {SubProfile(0, 1, 5, 0, 5): 1}
        inst = build_lp(two_bidder_k1, grid)
        assert inst.violation(inst.embed(pt)) <= 1e-12

    def test_bad_example_point(self):
        ds = bad_example(BadExampleSpec(k=2))
        grid = grid_of(ds)
        pt = encode_reserves(ds, grid, (8, 2, 4, 4, 0, 0, 0))
        inst = build_lp(ds, grid)
        assert inst.violation(inst.embed(pt)) <= 1e-9
        assert pt.objective == 20

    def test_soundness_on_random_pairs(self):
        rng = np.random.Generator(np.random.Philox(53))
        for ds in desk_instances(25, seed=43):
            grid = grid_of(ds)
            inst = build_lp(ds, grid)
            for _ in range(2):
                res = tuple(int(rng.choice(grid.values)) for _ in range(ds.num_real_buyers))
                res += (0,) * (ds.num_items + 1)
                pt = encode_reserves(ds, grid, res)
                vec = inst.embed(pt)
                assert inst.violation(vec) <= 1e-9
                assert pt.objective == revenue(ds, res)
                assert inst.exact_objective(pt) == revenue(ds, res)

    def test_supporter_mass_scaling(self):
        # for integral points the per-(buyer, auction) supporter mass is 0 or 1
        for ds in desk_instances(10, seed=47):
            grid = grid_of(ds)
            inst = build_lp(ds, grid)
            pt = encode_reserves(ds, grid, zero_reserves(ds))
            vec = inst.embed(pt)
            R = len(grid)
            for a in range(ds.num_auctions):
                for b in range(ds.num_buyers):
                    total = sum(vec[inst.yp_col(b, r, a)] for r in range(R))
                    assert min(abs(total), abs(total - 1.0)) <= 1e-9


class TestInterchangeDump:
    def test_dump_structure(self, two_bidder_k1):
        inst = build_lp(two_bidder_k1, grid_of(two_bidder_k1))
        text = inst.to_lp_text()
        assert text.startswith("Maximize")
        assert "Subject To" in text and text.rstrip().endswith("End")
        assert "x_0_10" in text and "y_0_10_0" in text and "yp_1_5_0" in text
        assert "s_0_0" in text

    def test_interpret_round_trip(self, two_bidder_k1):
        inst = build_lp(two_bidder_k1, grid_of(two_bidder_k1))
        sol = solve_lp(inst)
        s_parts, x_masses = inst.interpret(sol.vector)
        assert len(s_parts) == 1
        for b, masses in x_masses.items():
            assert sum(masses.values()) == pytest.approx(1.0, abs=1e-7)
        # auxiliaries come back as point mass at zero
        assert x_masses[2] == {0: 1.0} and x_masses[3] == {0: 1.0}
