"""Eager VCG auctions with personalized reserve prices.

All money values are integers at a fixed decimal scale declared by the
dataset, so auction execution, payments and revenues are exact.  Ties are
broken by buyer index everywhere (lower index wins), and the trailing
``num_items + 1`` auxiliary buyers of an augmented dataset bid zero, so they
lose every tie against real buyers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AUX_PREFIX = "~aux"


@dataclass(frozen=True)
class AuctionColumn:
    """One weighted auction: a multiplicity weight and one bid per buyer."""

    weight: int
    bids: tuple[int, ...]


@dataclass(frozen=True)
class BidDataset:
    """A weighted history of auctions over a fixed, ordered set of buyers.

    ``scale`` is the number of decimal digits carried by the integer money
    unit (bids of ``325`` at scale 2 mean 3.25).  Weights replicate identical
    auctions; revenue multiplies by the weight instead of materializing
    copies.
    """

    num_items: int
    buyers: tuple[str, ...]
    auctions: tuple[AuctionColumn, ...]
    includes_auxiliaries: bool = False
    scale: int = 0

    def __post_init__(self) -> None:
        if self.num_items < 1:
            raise ValueError("num_items must be a positive integer")
        if self.scale < 0:
            raise ValueError("scale must be non-negative")
        if len(set(self.buyers)) != len(self.buyers):
            raise ValueError("buyer ids must be unique")
        for i, auction in enumerate(self.auctions):
            if auction.weight < 1:
                raise ValueError(f"auction {i}: weight must be >= 1")
            if len(auction.bids) != len(self.buyers):
                raise ValueError(f"auction {i}: expected one bid per buyer")
            if any(b < 0 for b in auction.bids):
                raise ValueError(f"auction {i}: bids must be non-negative")
        if self.includes_auxiliaries:
            n_aux = self.num_items + 1
            if len(self.buyers) < n_aux:
                raise ValueError("augmented dataset is missing auxiliary buyers")
            for auction in self.auctions:
                if any(b != 0 for b in auction.bids[-n_aux:]):
                    raise ValueError("auxiliary buyers must bid 0 in every auction")

    @property
    def num_buyers(self) -> int:
        return len(self.buyers)

    @property
    def num_real_buyers(self) -> int:
        if self.includes_auxiliaries:
            return len(self.buyers) - (self.num_items + 1)
        return len(self.buyers)

    @property
    def num_auctions(self) -> int:
        return len(self.auctions)

    def max_bid(self, buyer: int) -> int:
        return max(a.bids[buyer] for a in self.auctions)

    def buyer_bids(self, buyer: int) -> tuple[int, ...]:
        return tuple(a.bids[buyer] for a in self.auctions)


@dataclass(frozen=True)
class ReserveGrid:
    """The sorted, deduplicated set of admissible reserve prices.

    Equal to the set of all bids appearing in the dataset; always contains 0
    (the auxiliary buyers' reserve).
    """

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.values or self.values[0] != 0:
            raise ValueError("grid must contain 0 as its smallest value")
        if any(a >= b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("grid values must be strictly increasing")

    @classmethod
    def from_dataset(cls, dataset: BidDataset) -> "ReserveGrid":
        values = {0}
        for auction in dataset.auctions:
            values.update(auction.bids)
        return cls(tuple(sorted(values)))

    def __contains__(self, value: int) -> bool:
        return value in self.values

    def __len__(self) -> int:
        return len(self.values)

    def index(self, value: int) -> int:
        return self.values.index(value)


@dataclass(frozen=True)
class AuctionOutcome:
    """Result of one eager VCG auction (unweighted).

    ``winners`` are the ``num_items`` highest cleared bids in tie-broken
    order, ``supporter`` the next cleared buyer, and each winner pays
    ``max(own reserve, supporter's bid)``.
    """

    cleared: frozenset[int]
    winners: tuple[int, ...]
    supporter: int
    payments: dict[int, int]
    revenue: int


ReserveVector = tuple[int, ...]


def add_auxiliary_buyers(dataset: BidDataset) -> BidDataset:
    """Append num_items + 1 zero-bidding auxiliary buyers.

    Rejects an already-augmented dataset: doubling the auxiliaries would
    corrupt winner counts.
    """
    if dataset.includes_auxiliaries:
        raise ValueError("dataset already includes auxiliary buyers")
    n_aux = dataset.num_items + 1
    aux_names = tuple(f"{AUX_PREFIX}{i}" for i in range(n_aux))
    if set(aux_names) & set(dataset.buyers):
        raise ValueError("buyer ids collide with auxiliary naming")
    zeros = (0,) * n_aux
    return BidDataset(
        num_items=dataset.num_items,
        buyers=dataset.buyers + aux_names,
        auctions=tuple(
            AuctionColumn(a.weight, a.bids + zeros) for a in dataset.auctions
        ),
        includes_auxiliaries=True,
        scale=dataset.scale,
    )


def strip_auxiliary_buyers(dataset: BidDataset) -> BidDataset:
    """Inverse of :func:`add_auxiliary_buyers`."""
    if not dataset.includes_auxiliaries:
        raise ValueError("dataset has no auxiliary buyers")
    n = dataset.num_real_buyers
    return BidDataset(
        num_items=dataset.num_items,
        buyers=dataset.buyers[:n],
        auctions=tuple(AuctionColumn(a.weight, a.bids[:n]) for a in dataset.auctions),
        includes_auxiliaries=False,
        scale=dataset.scale,
    )


def zero_reserves(dataset: BidDataset) -> ReserveVector:
    return (0,) * dataset.num_buyers


def validate_reserves(
    dataset: BidDataset,
    reserves: ReserveVector,
    grid: ReserveGrid | None = None,
) -> None:
    """Check a reserve vector against the dataset (and optionally the grid).

    Evaluation accepts arbitrary non-negative entries; pass ``grid`` to
    enforce grid membership for optimizer outputs.  Auxiliary entries must be
    exactly 0.
    """
    if len(reserves) != dataset.num_buyers:
        raise ValueError("reserve vector length does not match buyer count")
    if any(r < 0 for r in reserves):
        raise ValueError("reserves must be non-negative")
    if dataset.includes_auxiliaries:
        if any(r != 0 for r in reserves[dataset.num_real_buyers:]):
            raise ValueError("auxiliary buyers must have reserve 0")
    if grid is not None:
        for b, r in enumerate(reserves):
            if r not in grid:
                raise ValueError(f"reserve {r} of buyer {b} is not on the grid")


def _outcome(dataset: BidDataset, auction_index: int, reserves: ReserveVector) -> AuctionOutcome:
    bids = dataset.auctions[auction_index].bids
    k = dataset.num_items
    cleared = [b for b in range(len(bids)) if bids[b] >= reserves[b]]
    # lower index beats an equal bid
    cleared.sort(key=lambda b: (-bids[b], b))
    winners = tuple(cleared[:k])
    supporter = cleared[k]
    support_bid = bids[supporter]
    payments = {w: max(reserves[w], support_bid) for w in winners}
    return AuctionOutcome(
        cleared=frozenset(cleared),
        winners=winners,
        supporter=supporter,
        payments=payments,
        revenue=sum(payments.values()),
    )


def run_evcg(dataset: BidDataset, auction_index: int, reserves: ReserveVector) -> AuctionOutcome:
    """Execute one eager VCG auction; pure and deterministic.

    Requires an augmented dataset so that the supporter slot always exists.
    The returned revenue is unweighted; :func:`revenue` applies weights.
    """
    if not dataset.includes_auxiliaries:
        raise ValueError("run_evcg requires an augmented dataset")
    if not 0 <= auction_index < dataset.num_auctions:
        raise IndexError("auction index out of range")
    validate_reserves(dataset, reserves)
    return _outcome(dataset, auction_index, reserves)


def revenue(dataset: BidDataset, reserves: ReserveVector) -> int:
    """Total weighted revenue of the dataset under one reserve vector."""
    if not dataset.includes_auxiliaries:
        raise ValueError("revenue requires an augmented dataset")
    validate_reserves(dataset, reserves)
    return sum(
        a.weight * _outcome(dataset, i, reserves).revenue
        for i, a in enumerate(dataset.auctions)
    )


def kth_plus_one_bid(dataset: BidDataset, auction_index: int) -> int:
    """The (num_items + 1)-th highest raw bid of an auction, reserves ignored."""
    if not dataset.includes_auxiliaries:
        raise ValueError("kth_plus_one_bid requires an augmented dataset")
    bids = sorted(dataset.auctions[auction_index].bids, reverse=True)
    return bids[dataset.num_items]


def winners_above(
    dataset: BidDataset,
    auction_index: int,
    reserves: ReserveVector,
    tau: int,
) -> int:
    """Number of winners whose payment is at least ``tau`` in one auction."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    outcome = run_evcg(dataset, auction_index, reserves)
    return sum(1 for p in outcome.payments.values() if p >= tau)


class _BatchEvaluator:
    """Vectorized exact revenue evaluation for batches of reserve vectors.

    Precomputes the tie-broken bid order per auction once; all arithmetic is
    int64, so results match :func:`run_evcg` bit for bit.
    """

    def __init__(self, dataset: BidDataset):
        if not dataset.includes_auxiliaries:
            raise ValueError("batch evaluation requires an augmented dataset")
        self.dataset = dataset
        self.k = dataset.num_items
        self.weights = np.array([a.weight for a in dataset.auctions], dtype=np.int64)
        self.orders = []
        self.bids_ordered = []
        for a in dataset.auctions:
            bids = np.array(a.bids, dtype=np.int64)
            order = np.lexsort((np.arange(len(bids)), -bids))
            self.orders.append(order)
            self.bids_ordered.append(bids[order])

    def _auction_payments(self, auction_index: int, reserve_matrix: np.ndarray):
        """Per-sample winner payment matrix and masks for one auction."""
        order = self.orders[auction_index]
        bids = self.bids_ordered[auction_index]
        res = reserve_matrix[:, order]
        cleared = bids[None, :] >= res
        rank = np.cumsum(cleared, axis=1)
        win_mask = cleared & (rank <= self.k)
        support_pos = np.argmax(rank == self.k + 1, axis=1)
        support_bid = bids[support_pos]
        payments = np.maximum(res, support_bid[:, None])
        return payments, win_mask

    def revenues(self, reserve_matrix: np.ndarray) -> np.ndarray:
        """Weighted total revenue of each row of ``reserve_matrix``."""
        reserve_matrix = np.asarray(reserve_matrix, dtype=np.int64)
        total = np.zeros(reserve_matrix.shape[0], dtype=np.int64)
        for i in range(self.dataset.num_auctions):
            payments, win_mask = self._auction_payments(i, reserve_matrix)
            total += self.weights[i] * np.where(win_mask, payments, 0).sum(axis=1)
        return total

    def winners_above(self, auction_index: int, reserve_matrix: np.ndarray, tau: int) -> np.ndarray:
        """Per-row count of winners paying >= tau in one auction (unweighted)."""
        if tau <= 0:
            raise ValueError("tau must be positive")
        reserve_matrix = np.asarray(reserve_matrix, dtype=np.int64)
        payments, win_mask = self._auction_payments(auction_index, reserve_matrix)
        return (win_mask & (payments >= tau)).sum(axis=1)


def batch_evaluator(dataset: BidDataset) -> _BatchEvaluator:
    return _BatchEvaluator(dataset)
