"""Top-k retrieval over the product of two scored name lists.

The joint score of (u, v) is p(u) * p(v). Candidates are enumerated
best-first from a heap seeded at the top pair, so retrieving k items costs
O(k log k) regardless of grid size. Ordering, including ties, is always
(probability desc, first name asc, last name asc); gold_rank is the gold
pair's exact 1-based position under that total order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SortedFactor:
    names: tuple[str, ...]
    probs: np.ndarray  # descending

    @classmethod
    def from_mapping(cls, dist: dict[str, float]) -> "SortedFactor":
        items = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(
            names=tuple(name for name, _ in items),
            probs=np.array([p for _, p in items], dtype=np.float64),
        )


def iter_product_order(first: SortedFactor, last: SortedFactor):
    """Yield (prob, first_name, last_name) in the documented total order."""
    nu, nv = len(first.names), len(last.names)
    if nu == 0 or nv == 0:
        return
    pu, pv = first.probs, last.probs

    def key(i: int, j: int):
        return (-(pu[i] * pv[j]), first.names[i], last.names[j], i, j)

    heap = [key(0, 0)]
    seen = {(0, 0)}
    emitted: set[tuple[int, int]] = set()
    while heap:
        # Inside a zero-probability row the frontier follows factor order,
        # which need not be name order; but once the best remaining product
        # is zero, everything left is zero, so finish lexicographically.
        if heap[0][0] == 0.0:
            u_order = sorted(range(nu), key=lambda i: first.names[i])
            v_order = sorted(range(nv), key=lambda j: last.names[j])
            for i in u_order:
                for j in v_order:
                    if (i, j) not in emitted:
                        yield 0.0, first.names[i], last.names[j]
            return
        negp, uname, vname, i, j = heapq.heappop(heap)
        emitted.add((i, j))
        yield -negp, uname, vname
        if i + 1 < nu and (i + 1, j) not in seen:
            seen.add((i + 1, j))
            heapq.heappush(heap, key(i + 1, j))
        if j + 1 < nv and (i, j + 1) not in seen:
            seen.add((i, j + 1))
            heapq.heappush(heap, key(i, j + 1))


def top_k(first: SortedFactor, last: SortedFactor, k: int):
    """First k entries of the total order (all entries if k >= grid size)."""
    out = []
    for entry in iter_product_order(first, last):
        out.append(entry)
        if len(out) >= k:
            break
    return out


def exact_rank(
    first: SortedFactor,
    last: SortedFactor,
    gold_first: str,
    gold_last: str,
) -> int:
    """Gold's 1-based position: strictly-greater products, plus tied pairs
    that sort lexicographically before gold. Never materializes the grid
    beyond the tie set."""
    gi = first.names.index(gold_first)
    gj = last.names.index(gold_last)
    pu, pv = first.probs, last.probs
    t = pu[gi] * pv[gj]
    nu = len(pu)

    greater = 0
    ties_before = 0
    for i in range(nu):
        # pv is descending, so products pu[i]*pv[j] are non-increasing in j:
        # the > t entries form a prefix, the == t block sits directly after.
        prod = pu[i] * pv
        j_lo = int(np.searchsorted(-prod, -t, side="left"))   # count(> t)
        j_hi = int(np.searchsorted(-prod, -t, side="right"))  # count(>= t)
        greater += j_lo
        if j_hi > j_lo:
            uname = first.names[i]
            if uname < gold_first:
                ties_before += j_hi - j_lo
            elif uname == gold_first:
                for j in range(j_lo, j_hi):
                    if j != gj and last.names[j] < gold_last:
                        ties_before += 1
    return greater + ties_before + 1
