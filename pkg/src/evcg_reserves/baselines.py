"""Exact and heuristic baselines, plus the integrality-gap instance.

``brute_force_opt`` searches the product of per-buyer candidate reserves
exactly; ``greedy_reserves`` is a reconstructed one-pass coordinate ascent
(a baseline, not a primary artifact).  ``bad_example`` builds the weighted
four-column dataset on which naive one-shot rounding of the fractional
optimum loses to the best reserve vector for large item counts, and
``bad_example_fractional`` its hand-crafted fractional LP point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .auction import (
    AuctionColumn,
    BidDataset,
    ReserveGrid,
    add_auxiliary_buyers,
    batch_evaluator,
    zero_reserves,
)
from .errors import SizeGuardError
from .lp_model import LpPoint, SubProfile, make_subprofile

DEFAULT_BRUTE_CAP = 10_000_000


@dataclass(frozen=True)
class BadExampleSpec:
    """Item count and the mixing probability of the fractional point."""

    k: int
    delta: float = 0.025

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly between 0 and 1")


def bad_example(spec: BadExampleSpec, *, augmented: bool = True) -> BidDataset:
    """The k+2-buyer, four-column weighted instance.

    Columns carry weights (1, 1, k, k); buyer rows are
    b1 = (k^3, 0, 0, 0), b2 = (0, 0, k, 1) and b3..b_{k+2} = (0, k^2, k, 1).
    """
    k = spec.k
    tail = spec.k  # buyers b3..b_{k+2}
    columns = [
        AuctionColumn(1, (k**3,) + (0,) * (tail + 1)),
        AuctionColumn(1, (0, 0) + (k**2,) * tail),
        AuctionColumn(k, (0,) + (k,) * (tail + 1)),
        AuctionColumn(k, (0,) + (1,) * (tail + 1)),
    ]
    dataset = BidDataset(
        num_items=k,
        buyers=tuple(f"b{i + 1}" for i in range(k + 2)),
        auctions=tuple(columns),
    )
    return add_auxiliary_buyers(dataset) if augmented else dataset


def bad_example_optimal_vectors(spec: BadExampleSpec) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The two benchmark reserve vectors (real buyers then auxiliary zeros)."""
    k = spec.k
    aux = (0,) * (k + 1)
    first = (k**3, k) + (k**2,) * k + aux
    second = (k**3,) + (1,) * (k + 1) + aux
    return first, second


def bad_example_fractional(spec: BadExampleSpec) -> LpPoint:
    """The hand-crafted fractional point mixing the two benchmark vectors.

    Each listed k-winner profile expands to its k compatible sub-profiles
    (every winner paired with the listed supporter at the listed reserves),
    each carrying the profile's mass.
    """
    k, d = spec.k, spec.delta
    dataset = bad_example(spec)
    nreal = k + 2
    aux = tuple(range(nreal, nreal + k + 1))
    b1, b2 = 0, 1
    tail = tuple(range(2, nreal))  # b3..b_{k+2}

    def sub(a: int, winner: int, supporter: int, r1: int, r2: int) -> SubProfile:
        return make_subprofile(dataset, a, winner, supporter, r1, r2)

    s: dict[int, dict[SubProfile, float]] = {a: {} for a in range(4)}
    # auction 1: b1 wins at reserve k^3, auxiliaries fill the other slots
    s[0][sub(0, b1, aux[k - 1], k**3, 0)] = 1.0
    for i in range(k - 1):
        s[0][sub(0, aux[i], aux[k - 1], 0, 0)] = 1.0
    # auction 2: the tail buyers win at k^2 (mass delta) or 1 (mass 1-delta)
    for b in tail:
        s[1][sub(1, b, aux[0], k**2, 0)] = d
        s[1][sub(1, b, aux[0], 1, 0)] = 1.0 - d
    # auction 3: either b2 alone at reserve k, or everyone at reserve 1
    s[2][sub(2, b2, aux[k - 1], k, 0)] = d
    for i in range(k - 1):
        s[2][sub(2, aux[i], aux[k - 1], 0, 0)] = d
    s[2][sub(2, b2, tail[-1], 1, 1)] = 1.0 - d
    for b in tail[:-1]:
        s[2][sub(2, b, tail[-1], 1, 1)] = 1.0 - d
    # auction 4: everyone at reserve 1, leftover mass on the all-auxiliary profile
    s[3][sub(3, b2, tail[-1], 1, 1)] = 1.0 - d
    for b in tail[:-1]:
        s[3][sub(3, b, tail[-1], 1, 1)] = 1.0 - d
    for i in range(k):
        s[3][sub(3, aux[i], aux[k], 0, 0)] = d

    x: dict[int, dict[int, float]] = {
        b1: {k**3: 1.0},
        b2: {k: d, 1: 1.0 - d},
    }
    for b in tail:
        x[b] = {k**2: d, 1: 1.0 - d}
    for b in aux:
        x[b] = {0: 1.0}
    objective = sum(
        dataset.auctions[a].weight * sum(p.revenue * m for p, m in masses.items())
        for a, masses in s.items()
    )
    return LpPoint(s=s, x=x, objective=objective)


def _candidate_reserves(dataset: BidDataset, grid: ReserveGrid) -> list[list[int]]:
    """Per real-buyer candidates: 0 plus the buyer's own bid values.

    Raising a reserve between two of a buyer's bids never changes that
    buyer's clearing pattern and weakly lowers their payments, and a reserve
    above all their bids is dominated by reserving at the maximum bid, so
    the restriction preserves exact optimality.
    """
    cands = []
    for b in range(dataset.num_real_buyers):
        values = sorted({0} | set(dataset.buyer_bids(b)))
        cands.append([v for v in values if v in grid])
    return cands


def brute_force_opt(
    dataset: BidDataset,
    grid: ReserveGrid,
    *,
    max_evals: int = DEFAULT_BRUTE_CAP,
) -> tuple[tuple[int, ...], int]:
    """Exact maximizer over the candidate product; ties break lexicographically.

    Auxiliary reserves stay 0.  Refuses with :class:`SizeGuardError` when the
    candidate product exceeds ``max_evals``.
    """
    if not dataset.includes_auxiliaries:
        raise ValueError("brute_force_opt requires an augmented dataset")
    cands = _candidate_reserves(dataset, grid)
    total = 1
    for c in cands:
        total *= len(c)
        if total > max_evals:
            raise SizeGuardError(
                f"brute force would need {total}+ evaluations (cap {max_evals})"
            )
    evaluator = batch_evaluator(dataset)
    n_aux = dataset.num_items + 1
    best_rev = -1
    best_vec: tuple[int, ...] | None = None
    chunk: list[tuple[int, ...]] = []

    def flush() -> None:
        nonlocal best_rev, best_vec
        if not chunk:
            return
        mat = np.array(chunk, dtype=np.int64)
        revs = evaluator.revenues(mat)
        i = int(np.argmax(revs))
        if int(revs[i]) > best_rev:  # first max in product order = lexicographic
            best_rev = int(revs[i])
            best_vec = tuple(int(v) for v in mat[i])
        chunk.clear()

    for combo in itertools.product(*cands):
        chunk.append(combo + (0,) * n_aux)
        if len(chunk) >= 4096:
            flush()
    flush()
    assert best_vec is not None
    return best_vec, best_rev


def greedy_reserves(
    dataset: BidDataset, grid: ReserveGrid
) -> tuple[tuple[int, ...], int]:
    """One-pass coordinate ascent baseline.

    Buyers are visited in decreasing order of their maximum bid (ties by
    index); each buyer's reserve is set to the grid value maximizing total
    revenue with all other coordinates fixed, everyone starting at 0.
    """
    if not dataset.includes_auxiliaries:
        raise ValueError("greedy_reserves requires an augmented dataset")
    evaluator = batch_evaluator(dataset)
    current = list(zero_reserves(dataset))
    order = sorted(
        range(dataset.num_real_buyers), key=lambda b: (-dataset.max_bid(b), b)
    )
    for b in order:
        trials = np.tile(np.array(current, dtype=np.int64), (len(grid), 1))
        trials[:, b] = grid.values
        revs = evaluator.revenues(trials)
        current[b] = int(grid.values[int(np.argmax(revs))])  # smallest maximizer
    vec = tuple(current)
    return vec, int(evaluator.revenues(np.array([vec], dtype=np.int64))[0])
