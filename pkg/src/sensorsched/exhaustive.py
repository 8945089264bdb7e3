"""Brute-force enumeration of feasible schedules on small instances.

Provides certified ground truth -- the optimal cost OPT, the worst cost
MAX, and the resulting approximation ratio of a candidate schedule. This
module exists to certify the greedy scheduler, not to compete with it;
enumeration is capped and raises rather than running forever.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

from .entropy_oracle import OracleContext, conditional_entropy
from .errors import DimensionMismatchError, TooLargeError
from .sensing import Schedule

__all__ = [
    "EnumerationResult",
    "BoundCertificate",
    "exhaustive_optimum",
    "certify_bound",
    "num_candidate_schedules",
    "export_table_csv",
]

Mode = Literal["exact_budget", "up_to_budget"]

# Gaps below DEGENERATE_GAP mean MAX == OPT: every schedule is equivalent
# and the only meaningful certificate is equality within EQUAL_TOL.
DEGENERATE_GAP = 1e-12
EQUAL_TOL = 1e-9


@dataclass(frozen=True)
class EnumerationResult:
    """Outcome of enumerating every feasible schedule."""

    opt_cost: float
    max_cost: float
    opt_schedule: Schedule
    num_enumerated: int
    full_table: tuple[tuple[tuple[tuple[int, ...], ...], float], ...] | None = None


@dataclass(frozen=True)
class BoundCertificate:
    """Approximation certificate of a schedule cost against OPT and MAX.

    ``ratio`` is (cost - OPT) / (MAX - OPT), or None when the gap is
    degenerate (MAX == OPT to within DEGENERATE_GAP); in the degenerate
    case ``certified_equal`` records whether the cost matches OPT.
    """

    greedy_cost: float
    opt_cost: float
    max_cost: float
    ratio: float | None
    certified_equal: bool

    @property
    def holds(self) -> bool:
        """True when the half-range guarantee is certified."""
        if self.ratio is None:
            return self.certified_equal
        return self.ratio <= 0.5 + 1e-9


def _step_candidates(m: int, s_k: int, mode: Mode) -> list[tuple[int, ...]]:
    sizes = range(s_k, s_k + 1) if mode == "exact_budget" else range(0, s_k + 1)
    out: list[tuple[int, ...]] = []
    for size in sizes:
        out.extend(itertools.combinations(range(m), size))
    return out


def num_candidate_schedules(m: int, budgets: Sequence[int], mode: Mode = "up_to_budget") -> int:
    """Number of feasible schedules the enumeration will visit."""
    total = 1
    for s_k in budgets:
        if mode == "exact_budget":
            total *= math.comb(m, s_k)
        else:
            total *= sum(math.comb(m, j) for j in range(s_k + 1))
    return total


def exhaustive_optimum(
    ctx: OracleContext,
    budgets: Sequence[int],
    mode: Mode = "up_to_budget",
    *,
    cap: int = 10**6,
    keep_table: bool = False,
) -> EnumerationResult:
    """Evaluate the objective on every feasible schedule.

    Enumeration is lexicographic: over steps, then over index sets
    (sizes ascending, then combination order), so the optional full table
    is stable across runs and safe for regression comparison.

    Args:
        mode: "up_to_budget" visits every set with |S_k| <= s_k (the
            actual feasible region); "exact_budget" only |S_k| == s_k,
            which is cheaper and loses nothing for minimization because
            the objective is non-increasing in the selection.
        cap: refuse enumerations beyond this many schedules.
        keep_table: also return every (schedule sets, cost) pair.

    Raises:
        TooLargeError: the candidate count exceeds ``cap``.
    """
    budgets = tuple(int(b) for b in budgets)
    if len(budgets) != ctx.K:
        raise DimensionMismatchError(f"{len(budgets)} budgets for horizon {ctx.K}")
    m = ctx.suite.m
    total = num_candidate_schedules(m, budgets, mode)
    if total > cap:
        raise TooLargeError(
            f"{total} candidate schedules exceed the cap of {cap}; "
            "shrink the instance or sample instead"
        )

    per_step = [_step_candidates(m, s_k, mode) for s_k in budgets]
    opt_cost = math.inf
    max_cost = -math.inf
    opt_sets: tuple[tuple[int, ...], ...] | None = None
    table: list[tuple[tuple[tuple[int, ...], ...], float]] = []
    count = 0
    for sets in itertools.product(*per_step):
        cost = conditional_entropy(ctx, Schedule._unchecked(sets, budgets))
        count += 1
        if keep_table:
            table.append((sets, cost))
        if cost < opt_cost:
            opt_cost = cost
            opt_sets = sets
        if cost > max_cost:
            max_cost = cost

    return EnumerationResult(
        opt_cost=opt_cost,
        max_cost=max_cost,
        opt_schedule=Schedule(sets=opt_sets, budgets=budgets),
        num_enumerated=count,
        full_table=tuple(table) if keep_table else None,
    )


def certify_bound(
    ctx: OracleContext,
    budgets: Sequence[int],
    greedy_cost: float,
    *,
    mode: Mode = "up_to_budget",
    cap: int = 10**6,
) -> BoundCertificate:
    """Certify a schedule cost against exhaustively enumerated OPT and MAX.

    Raises:
        TooLargeError: propagated from the enumeration.
    """
    result = exhaustive_optimum(ctx, budgets, mode, cap=cap)
    gap = result.max_cost - result.opt_cost
    if gap <= DEGENERATE_GAP:
        return BoundCertificate(
            greedy_cost=greedy_cost,
            opt_cost=result.opt_cost,
            max_cost=result.max_cost,
            ratio=None,
            certified_equal=abs(greedy_cost - result.opt_cost) <= EQUAL_TOL,
        )
    return BoundCertificate(
        greedy_cost=greedy_cost,
        opt_cost=result.opt_cost,
        max_cost=result.max_cost,
        ratio=(greedy_cost - result.opt_cost) / gap,
        certified_equal=False,
    )


def export_table_csv(result: EnumerationResult, path: str | Path) -> None:
    """Write the full enumeration table as CSV.

    One row per schedule: per-step columns ``set_k`` holding the sorted
    selected indices joined by ';' (empty for no selection), then the
    cost in nats with 12 significant digits.
    """
    if result.full_table is None:
        raise ValueError("enumeration was run without keep_table=True")
    K = result.opt_schedule.num_steps
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"set_{k}" for k in range(K)] + ["cost_nats"])
        for sets, cost in result.full_table:
            writer.writerow(
                [";".join(str(i) for i in s) for s in sets] + [f"{cost:.12g}"]
            )
