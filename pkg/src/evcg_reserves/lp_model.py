"""Sub-profile LP: enumeration, constraint assembly, solving, and encoding.

The revenue of an auction is determined by each winner's reserve and the
supporting buyer's bid, so an auction outcome decomposes into per-winner
sub-profiles (winner, supporter, winner reserve, supporter reserve).  The LP
relaxes the integral assignment of sub-profiles subject to consistency
constraints; any integral reserve vector embeds as a feasible point whose
objective equals its exact revenue, which makes the LP optimum an upper
bound for the best reserve vector.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import lp_solver
from .auction import BidDataset, ReserveGrid, run_evcg, validate_reserves
from .errors import LpSolveError, SizeGuardError

DEFAULT_MAX_SUBPROFILES = 500_000


class SubProfile(NamedTuple):
    """One winner's slice of an auction outcome.

    Valid iff the winner's bid is at least the supporter's, both clear their
    reserves, and winner != supporter.  Revenue is
    ``max(supporter bid, winner reserve)``.
    """

    winner: int
    supporter: int
    winner_reserve: int
    supporter_reserve: int
    revenue: int


def make_subprofile(
    dataset: BidDataset, auction_index: int, winner: int, supporter: int,
    winner_reserve: int, supporter_reserve: int,
) -> SubProfile:
    bids = dataset.auctions[auction_index].bids
    if winner == supporter:
        raise ValueError("winner and supporter must differ")
    if bids[winner] < bids[supporter]:
        raise ValueError("winner must bid at least the supporter's bid")
    if winner_reserve > bids[winner] or supporter_reserve > bids[supporter]:
        raise ValueError("reserves must clear the respective bids")
    return SubProfile(
        winner, supporter, winner_reserve, supporter_reserve,
        max(bids[supporter], winner_reserve),
    )


def enumerate_subprofiles(
    dataset: BidDataset,
    auction_index: int,
    grid: ReserveGrid,
    *,
    max_subprofiles: int = DEFAULT_MAX_SUBPROFILES,
) -> list[SubProfile]:
    """All valid sub-profiles of one auction, ordered by (winner, supporter, r1, r2).

    Pairs violating the bid ordering and reserves above the respective bid
    are skipped up front; those tuples are invalid, so nothing is lost.
    Raises :class:`SizeGuardError` beyond ``max_subprofiles``.
    """
    if not dataset.includes_auxiliaries:
        raise ValueError("enumeration requires an augmented dataset")
    bids = dataset.auctions[auction_index].bids
    n = dataset.num_buyers
    values = grid.values
    # number of grid values clearing each bid (grid is sorted)
    n_le = [bisect.bisect_right(values, bid) for bid in bids]
    out: list[SubProfile] = []
    for b1 in range(n):
        for b2 in range(n):
            if b1 == b2 or bids[b1] < bids[b2]:
                continue
            pair_count = n_le[b1] * n_le[b2]
            if len(out) + pair_count > max_subprofiles:
                raise SizeGuardError(
                    f"auction {auction_index}: sub-profile count exceeds "
                    f"{max_subprofiles}; raise the budget to proceed"
                )
            sup_bid = bids[b2]
            for r1 in values[: n_le[b1]]:
                rev = max(sup_bid, r1)
                for r2 in values[: n_le[b2]]:
                    out.append(SubProfile(b1, b2, r1, r2, rev))
    return out


@dataclass
class LpPoint:
    """A structured LP point: sub-profile masses and per-buyer reserve masses.

    The y / y' blocks are derived from the masses via the defining equalities
    when the point is embedded into an instance's variable space.
    """

    s: dict[int, dict[SubProfile, float]]
    x: dict[int, dict[int, float]]
    y: dict[tuple[int, int, int], float] | None = None
    y_prime: dict[tuple[int, int, int], float] | None = None
    objective: float | int | None = None


@dataclass
class LpInstance:
    """Assembled constraint system over variables s, x, y, y'.

    Row layout (equalities then inequalities):
      (1) y[b,r,a]  = sum of s over sub-profiles with winner b, reserve r
      (2) y'[b,r,a] = sum of s over sub-profiles with supporter b, reserve r, / k
      (6) sum_r x[b,r] = 1 for every free buyer
      (3) y[b,r,a] + y'[b,r,a] <= x[b,r]
      (4) mass(winner=b2, supporter=b1) <= sum_r y'[b1,r,a]
      (5) sum_p s[a,p] <= k
    Auxiliary and zero-everywhere buyers are fixed at reserve 0 (their x is a
    constant, not a variable).
    """

    dataset: BidDataset
    grid: ReserveGrid
    subprofiles: tuple[tuple[SubProfile, ...], ...]
    free_buyers: tuple[int, ...]
    allowed_r: tuple[tuple[int, ...], ...]  # grid indices allowed per buyer
    num_vars: int
    s_offsets: tuple[int, ...]
    x_offset: int
    y_offset: int
    yp_offset: int
    c: np.ndarray
    exact_obj: tuple[tuple[int, ...], ...]  # weight * revenue per s variable
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_le: sp.csr_matrix
    b_le: np.ndarray
    _sp_index: tuple[dict[SubProfile, int], ...] = field(repr=False, default=())
    _std: lp_solver.StandardLp | None = field(repr=False, default=None)

    # -- variable addressing -------------------------------------------------
    def s_col(self, auction: int, local_index: int) -> int:
        return self.s_offsets[auction] + local_index

    def x_col(self, buyer: int, r_index: int) -> int | None:
        if buyer not in self._free_set or r_index not in self._allowed_set[buyer]:
            return None
        return self.x_offset + self._x_base[buyer] + self._allowed_pos[buyer][r_index]

    def y_col(self, buyer: int, r_index: int, auction: int) -> int:
        n, R = self.dataset.num_buyers, len(self.grid)
        return self.y_offset + (auction * n + buyer) * R + r_index

    def yp_col(self, buyer: int, r_index: int, auction: int) -> int:
        n, R = self.dataset.num_buyers, len(self.grid)
        return self.yp_offset + (auction * n + buyer) * R + r_index

    def __post_init__(self) -> None:
        self._free_set = set(self.free_buyers)
        self._allowed_set = {b: set(self.allowed_r[b]) for b in range(self.dataset.num_buyers)}
        self._allowed_pos = {
            b: {r: i for i, r in enumerate(self.allowed_r[b])}
            for b in range(self.dataset.num_buyers)
        }
        self._x_base = {}
        base = 0
        for b in self.free_buyers:
            self._x_base[b] = base
            base += len(self.allowed_r[b])
        self._sp_index = tuple(
            {p: i for i, p in enumerate(prof)} for prof in self.subprofiles
        )

    @property
    def constraint_counts(self) -> dict[str, int]:
        n, R, A = self.dataset.num_buyers, len(self.grid), self.dataset.num_auctions
        return {
            "winner_link": A * n * R,
            "supporter_link": A * n * R,
            "reserve_consistency": A * n * R,
            "compatibility": A * n * n,
            "per_auction_cap": A,
            "one_reserve_each": sum(1 for _ in self.free_buyers),
        }

    def to_standard_lp(self) -> lp_solver.StandardLp:
        if self._std is None:
            self._std = lp_solver.StandardLp(
                c=self.c, A_eq=self.A_eq, b_eq=self.b_eq,
                A_le=self.A_le, b_le=self.b_le,
            )
        return self._std

    def violation(self, vec: np.ndarray) -> float:
        return lp_solver.feasibility_violation(self.to_standard_lp(), vec)

    # -- structured points ---------------------------------------------------
    def embed(self, point: LpPoint) -> np.ndarray:
        """Map a structured point into the variable space, deriving y and y'.

        Raises ``ValueError`` if a sub-profile of the point was never
        enumerated (e.g. a reserve off the grid) or if a fixed buyer carries
        mass away from 0.
        """
        k = self.dataset.num_items
        vec = np.zeros(self.num_vars)
        for a, masses in point.s.items():
            index = self._sp_index[a]
            for p, mass in masses.items():
                if p not in index:
                    raise ValueError(f"sub-profile {p} is not valid for auction {a}")
                vec[self.s_col(a, index[p])] = mass
                r1_idx = self.grid.index(p.winner_reserve)
                r2_idx = self.grid.index(p.supporter_reserve)
                vec[self.y_col(p.winner, r1_idx, a)] += mass
                vec[self.yp_col(p.supporter, r2_idx, a)] += mass / k
        for b, masses in point.x.items():
            for r, mass in masses.items():
                if r not in self.grid:
                    raise ValueError(f"reserve {r} of buyer {b} is not on the grid")
                col = self.x_col(b, self.grid.index(r))
                if col is not None:
                    vec[col] = mass
                elif b in self._free_set and r != 0 and mass != 0:
                    raise ValueError(
                        f"reserve {r} of buyer {b} is outside the buyer's allowed set"
                    )
                # fixed buyers: x is the constant point mass at 0; any reserve
                # above their (zero) bids is revenue-equivalent and never
                # appears in a sub-profile, so the mass is dropped soundly
        return vec

    def interpret(self, vec: np.ndarray) -> tuple[list[np.ndarray], dict[int, dict[int, float]]]:
        """Split a variable vector into per-auction s arrays and x masses.

        Fixed buyers come back as a point mass at 0.
        """
        s_parts = []
        for a, prof in enumerate(self.subprofiles):
            lo = self.s_offsets[a]
            s_parts.append(np.asarray(vec[lo: lo + len(prof)], dtype=float))
        x_masses: dict[int, dict[int, float]] = {}
        for b in range(self.dataset.num_buyers):
            if b in self._free_set:
                x_masses[b] = {
                    self.grid.values[r_idx]: float(vec[self.x_col(b, r_idx)])
                    for r_idx in self.allowed_r[b]
                }
            else:
                x_masses[b] = {0: 1.0}
        return s_parts, x_masses

    def exact_objective(self, point: LpPoint) -> float | int:
        """Inner product of the point's s masses with exact integer coefficients.

        Integer masses give an exactly-integer result.
        """
        total: float | int = 0
        for a, masses in point.s.items():
            index = self._sp_index[a]
            coeff = self.exact_obj[a]
            for p, mass in masses.items():
                total += coeff[index[p]] * mass
        return total

    def objective_of(self, vec: np.ndarray) -> float:
        return float(self.c @ vec)

    # -- text interchange ----------------------------------------------------
    def var_names(self) -> list[str]:
        names = [""] * self.num_vars
        for a, prof in enumerate(self.subprofiles):
            for i in range(len(prof)):
                names[self.s_col(a, i)] = f"s_{a}_{i}"
        for b in self.free_buyers:
            for r_idx in self.allowed_r[b]:
                names[self.x_col(b, r_idx)] = f"x_{b}_{self.grid.values[r_idx]}"
        n, R, A = self.dataset.num_buyers, len(self.grid), self.dataset.num_auctions
        for a in range(A):
            for b in range(n):
                for r_idx in range(R):
                    r = self.grid.values[r_idx]
                    names[self.y_col(b, r_idx, a)] = f"y_{b}_{r}_{a}"
                    names[self.yp_col(b, r_idx, a)] = f"yp_{b}_{r}_{a}"
        return names

    def to_lp_text(self) -> str:
        """Dump in LP interchange format for cross-checking with external solvers."""
        names = self.var_names()

        def terms(row: sp.csr_matrix) -> str:
            parts = []
            for j, v in zip(row.indices, row.data):
                sign = "+" if v >= 0 else "-"
                parts.append(f"{sign} {abs(v):.12g} {names[j]}")
            return " ".join(parts) if parts else "0 " + names[0]

        lines = ["Maximize", " obj: " + terms(sp.csr_matrix(self.c))]
        lines.append("Subject To")
        for i in range(self.A_eq.shape[0]):
            lines.append(f" e{i}: {terms(self.A_eq.getrow(i))} = {self.b_eq[i]:.12g}")
        for i in range(self.A_le.shape[0]):
            lines.append(f" l{i}: {terms(self.A_le.getrow(i))} <= {self.b_le[i]:.12g}")
        lines.append("Bounds")
        lines.extend(f" 0 <= {name}" for name in names)
        lines.append("End")
        return "\n".join(lines) + "\n"


def build_lp(
    dataset: BidDataset,
    grid: ReserveGrid,
    *,
    max_subprofiles: int = DEFAULT_MAX_SUBPROFILES,
    per_buyer_grid: bool = False,
) -> LpInstance:
    """Assemble the sub-profile LP for a whole dataset.

    ``per_buyer_grid`` restricts each buyer's reserve support to their own
    bid values plus 0 instead of the global grid (optional variant; the
    default is the full grid).
    """
    if not dataset.includes_auxiliaries:
        raise ValueError("build_lp requires an augmented dataset")
    n = dataset.num_buyers
    k = dataset.num_items
    R = len(grid)
    A = dataset.num_auctions

    budget = max_subprofiles
    subprofiles: list[tuple[SubProfile, ...]] = []
    for a in range(A):
        prof = enumerate_subprofiles(dataset, a, grid, max_subprofiles=budget)
        budget -= len(prof)
        subprofiles.append(tuple(prof))

    # auxiliary buyers and buyers bidding 0 everywhere stay at reserve 0
    free_buyers = tuple(
        b for b in range(dataset.num_real_buyers) if dataset.max_bid(b) > 0
    )
    allowed_r: list[tuple[int, ...]] = []
    for b in range(n):
        if per_buyer_grid and b in set(free_buyers):
            values = sorted({0} | set(dataset.buyer_bids(b)))
            allowed_r.append(tuple(grid.index(v) for v in values))
        else:
            allowed_r.append(tuple(range(R)))

    s_offsets = []
    base = 0
    for prof in subprofiles:
        s_offsets.append(base)
        base += len(prof)
    x_offset = base
    base += sum(len(allowed_r[b]) for b in free_buyers)
    y_offset = base
    base += A * n * R
    yp_offset = base
    base += A * n * R
    num_vars = base

    c = np.zeros(num_vars)
    exact_obj = []
    for a, prof in enumerate(subprofiles):
        w = dataset.auctions[a].weight
        coeffs = tuple(w * p.revenue for p in prof)
        exact_obj.append(coeffs)
        c[s_offsets[a]: s_offsets[a] + len(prof)] = coeffs

    instance = LpInstance(
        dataset=dataset, grid=grid, subprofiles=tuple(subprofiles),
        free_buyers=free_buyers, allowed_r=tuple(allowed_r),
        num_vars=num_vars, s_offsets=tuple(s_offsets),
        x_offset=x_offset, y_offset=y_offset, yp_offset=yp_offset,
        c=c, exact_obj=tuple(exact_obj),
        A_eq=sp.csr_matrix((0, num_vars)), b_eq=np.zeros(0),
        A_le=sp.csr_matrix((0, num_vars)), b_le=np.zeros(0),
    )

    eq_rows: list[int] = []
    eq_cols: list[int] = []
    eq_data: list[float] = []
    eq_rhs: list[float] = []
    le_rows: list[int] = []
    le_cols: list[int] = []
    le_data: list[float] = []
    le_rhs: list[float] = []

    def eq_row(entries: list[tuple[int, float]], rhs: float) -> None:
        r = len(eq_rhs)
        for col, val in entries:
            eq_rows.append(r)
            eq_cols.append(col)
            eq_data.append(val)
        eq_rhs.append(rhs)

    def le_row(entries: list[tuple[int, float]], rhs: float) -> None:
        r = len(le_rhs)
        for col, val in entries:
            le_rows.append(r)
            le_cols.append(col)
            le_data.append(val)
        le_rhs.append(rhs)

    grid_pos = {v: i for i, v in enumerate(grid.values)}
    for a in range(A):
        prof = subprofiles[a]
        by_winner_r: dict[tuple[int, int], list[int]] = {}
        by_supporter_r: dict[tuple[int, int], list[int]] = {}
        by_pair: dict[tuple[int, int], list[int]] = {}
        for i, p in enumerate(prof):
            by_winner_r.setdefault((p.winner, grid_pos[p.winner_reserve]), []).append(i)
            by_supporter_r.setdefault((p.supporter, grid_pos[p.supporter_reserve]), []).append(i)
            by_pair.setdefault((p.winner, p.supporter), []).append(i)

        for b in range(n):
            for r_idx in range(R):
                # (1) winner link
                entries = [(instance.y_col(b, r_idx, a), 1.0)]
                entries += [(instance.s_col(a, i), -1.0) for i in by_winner_r.get((b, r_idx), ())]
                eq_row(entries, 0.0)
                # (2) supporter link, scaled by 1/k
                entries = [(instance.yp_col(b, r_idx, a), 1.0)]
                entries += [(instance.s_col(a, i), -1.0 / k) for i in by_supporter_r.get((b, r_idx), ())]
                eq_row(entries, 0.0)
                # (3) reserve consistency against x (fixed buyers: x is constant)
                entries = [
                    (instance.y_col(b, r_idx, a), 1.0),
                    (instance.yp_col(b, r_idx, a), 1.0),
                ]
                xc = instance.x_col(b, r_idx)
                if xc is not None:
                    entries.append((xc, -1.0))
                    le_row(entries, 0.0)
                else:
                    fixed_mass = 1.0 if (b not in instance._free_set and grid.values[r_idx] == 0) else 0.0
                    le_row(entries, fixed_mass)
        # (4) compatibility: includes b1 == b2 rows, vacuous but kept as written
        for b1 in range(n):
            yp_cols = [(instance.yp_col(b1, r_idx, a), -1.0) for r_idx in range(R)]
            for b2 in range(n):
                entries = [(instance.s_col(a, i), 1.0) for i in by_pair.get((b2, b1), ())]
                le_row(entries + yp_cols, 0.0)
        # (5) at most k sub-profiles happen
        le_row([(instance.s_col(a, i), 1.0) for i in range(len(prof))], float(k))
    # (6) one reserve per free buyer
    for b in free_buyers:
        eq_row([(instance.x_col(b, r_idx), 1.0) for r_idx in allowed_r[b]], 1.0)

    instance.A_eq = sp.csr_matrix(
        (eq_data, (eq_rows, eq_cols)), shape=(len(eq_rhs), num_vars)
    )
    instance.b_eq = np.array(eq_rhs)
    instance.A_le = sp.csr_matrix(
        (le_data, (le_rows, le_cols)), shape=(len(le_rhs), num_vars)
    )
    instance.b_le = np.array(le_rhs)
    return instance


@dataclass
class LpSolution:
    """Verified optimal solution of an :class:`LpInstance`."""

    instance: LpInstance
    objective: float
    s: list[np.ndarray]
    x_masses: dict[int, dict[int, float]]
    vector: np.ndarray
    iterations: int
    max_violation: float
    complementarity: float | None = None

    @property
    def dataset(self) -> BidDataset:
        return self.instance.dataset

    @property
    def grid(self) -> ReserveGrid:
        return self.instance.grid


def solve_lp(
    instance: LpInstance,
    *,
    tol_feas: float = 1e-7,
    tol_obj: float = 1e-9,
    max_iterations: int | None = None,
    time_limit: float | None = None,
) -> LpSolution:
    """Solve and independently verify an assembled instance.

    Infeasible/unbounded statuses cannot occur for well-formed instances and
    are raised as errors, as is an iteration cap; there is no silently
    suboptimal return.
    """
    result = lp_solver.solve(
        instance.to_standard_lp(),
        max_iterations=max_iterations,
        time_limit=time_limit,
    )
    if result.status is lp_solver.SolveStatus.ITERATION_LIMIT:
        raise LpSolveError("iteration/time limit exceeded before optimality")
    if result.status is not lp_solver.SolveStatus.OPTIMAL:
        raise LpSolveError(f"internal error: solver status {result.status.value}")
    violation = instance.violation(result.x)
    if violation > tol_feas:
        raise LpSolveError(f"returned point violates constraints by {violation:.2e}")
    recomputed = instance.objective_of(result.x)
    if abs(recomputed - result.objective) > tol_obj * max(1.0, abs(recomputed)):
        raise LpSolveError("solver objective does not match the recomputed inner product")
    s_parts, x_masses = instance.interpret(result.x)
    return LpSolution(
        instance=instance,
        objective=recomputed,
        s=s_parts,
        x_masses=x_masses,
        vector=result.x,
        iterations=result.iterations,
        max_violation=violation,
        complementarity=result.complementarity,
    )


def encode_reserves(
    dataset: BidDataset, grid: ReserveGrid, reserves: tuple[int, ...]
) -> LpPoint:
    """Represent an integral reserve vector as a feasible LP point.

    Runs the auctions, sets mass 1 on each achieved sub-profile and on each
    buyer's actual reserve, and records indicator y / y' blocks.  The point's
    objective equals the exact weighted revenue.
    """
    if not dataset.includes_auxiliaries:
        raise ValueError("encode_reserves requires an augmented dataset")
    validate_reserves(dataset, reserves, grid)
    s: dict[int, dict[SubProfile, float]] = {}
    y: dict[tuple[int, int, int], float] = {}
    yp: dict[tuple[int, int, int], float] = {}
    objective = 0
    for a in range(dataset.num_auctions):
        outcome = run_evcg(dataset, a, reserves)
        sup = outcome.supporter
        sup_bid = dataset.auctions[a].bids[sup]
        masses: dict[SubProfile, float] = {}
        for w in outcome.winners:
            p = SubProfile(w, sup, reserves[w], reserves[sup], max(sup_bid, reserves[w]))
            masses[p] = 1
            y[(w, reserves[w], a)] = 1.0
            objective += dataset.auctions[a].weight * p.revenue
        yp[(sup, reserves[sup], a)] = 1.0
        s[a] = masses
    x = {b: {reserves[b]: 1.0} for b in range(dataset.num_buyers)}
    return LpPoint(s=s, x=x, y=y, y_prime=yp, objective=objective)
