"""Per-column rate allocation maximising the minimum receive distance.

Given a column-level channel ``h_cols`` (N_r x N) and a target average rate
``xi_bar`` in bits per channel use, every column n gets a constellation of
order ``M_n`` such that ``mean(log2 N + log2 M_n) == xi_bar``. The improved
scheme picks the allocation with the largest minimum squared distance between
noiseless received points; the simplified (SI) scheme replaces the
cross-column distance by a unit-modulus surrogate that only needs the
channel correlations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constellation import Constellation, default_for_order, make_psk

__all__ = [
    "InfeasibleRateError",
    "RateAllocation",
    "DistanceReport",
    "PAIR_MODES",
    "DEFAULT_CANDIDATES",
    "channel_taus",
    "min_distance",
    "enumerate_allocations",
    "optimize_improved",
    "optimize_si",
    "si_objective",
    "constellations_for",
]

DEFAULT_CANDIDATES = (2, 4, 8, 16)
# "all": every (n, m) != (n_hat, m_hat). "strict": only n != n_hat and m != m_hat.
PAIR_MODES = ("all", "strict")


class InfeasibleRateError(ValueError):
    """No allocation from the candidate orders meets the average-rate constraint."""


@dataclass(frozen=True)
class RateAllocation:
    per_column_orders: tuple[int, ...]
    xi_n: tuple[float, ...]
    xi_bar: float

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> "RateAllocation":
        orders = tuple(int(m) for m in orders)
        sb = math.log2(len(orders))
        xi = tuple(sb + math.log2(m) for m in orders)
        return cls(orders, xi, sum(xi) / len(xi))

    @property
    def n_columns(self) -> int:
        return len(self.per_column_orders)


@dataclass(frozen=True)
class DistanceReport:
    d_min_sq: float
    argmin_pair: tuple[tuple[int, int], tuple[int, int]]
    tau1: float
    tau2: float
    tau3: complex


def channel_taus(h_cols: np.ndarray, n: int, n_hat: int) -> tuple[float, float, complex]:
    """Column energies and their correlation: ||h_n||^2, ||h_nhat||^2, sum_r h_rn conj(h_rnhat)."""
    a, b = h_cols[:, n], h_cols[:, n_hat]
    return float(np.vdot(a, a).real), float(np.vdot(b, b).real), complex(np.vdot(b, a))


def constellations_for(
    alloc: RateAllocation | Sequence[int], family: str = "mixed", normalize: bool = True
) -> list[Constellation]:
    """Constellations of an allocation.

    ``"mixed"``: BPSK/QPSK up to 4 points, QAM above. ``"psk"``: PSK for every
    order. ``normalize=False`` keeps QAM on its integer grid.
    """
    orders = alloc.per_column_orders if isinstance(alloc, RateAllocation) else tuple(alloc)
    if family == "psk":
        return [make_psk(m) for m in orders]
    if family != "mixed":
        raise ValueError(f"unknown constellation family {family!r}")
    return [default_for_order(m, normalize=normalize) for m in orders]


def _check(h_cols: np.ndarray, n_columns: int) -> np.ndarray:
    h = np.asarray(h_cols, dtype=complex)
    if h.ndim != 2 or h.shape[1] != n_columns:
        raise ValueError(f"channel of shape {h.shape} does not have {n_columns} columns")
    return h


def min_distance(
    h_cols: np.ndarray,
    alloc: RateAllocation,
    constellations: Sequence[Constellation] | None = None,
    pair_mode: str = "all",
) -> DistanceReport:
    """Minimum squared distance between noiseless received points of an allocation.

    For each column pair the distance of symbols (s, s_hat) is
    ``|s|^2 tau1 + |s_hat|^2 tau2 - 2 Re{s conj(s_hat) tau3}``.
    """
    if pair_mode not in PAIR_MODES:
        raise ValueError(f"pair_mode must be one of {PAIR_MODES}")
    h = _check(h_cols, alloc.n_columns)
    cons = list(constellations) if constellations is not None else constellations_for(alloc)
    if [c.order for c in cons] != list(alloc.per_column_orders):
        raise ValueError("constellations do not match the allocation orders")
    best = None
    for n, n_hat in itertools.product(range(alloc.n_columns), repeat=2):
        if pair_mode == "strict" and n == n_hat:
            continue
        t1, t2, t3 = channel_taus(h, n, n_hat)
        s = cons[n].points[:, None]
        sh = cons[n_hat].points[None, :]
        d = np.abs(s) ** 2 * t1 + np.abs(sh) ** 2 * t2 - 2.0 * np.real(s * np.conj(sh) * t3)
        if n == n_hat:
            np.fill_diagonal(d, np.inf)
        if pair_mode == "strict":
            k = min(d.shape)
            d[np.arange(k), np.arange(k)] = np.inf
        m, m_hat = np.unravel_index(np.argmin(d), d.shape)
        val = max(float(d[m, m_hat]), 0.0)
        if best is None or val < best.d_min_sq:
            best = DistanceReport(val, ((n, int(m)), (n_hat, int(m_hat))), t1, t2, t3)
    if best is None:
        raise ValueError("no admissible pairs (a single column in strict mode)")
    return best


def enumerate_allocations(
    n_columns: int, xi_bar: float, candidate_orders: Sequence[int] = DEFAULT_CANDIDATES
) -> list[RateAllocation]:
    """Every per-column order tuple meeting the average rate exactly, in lexicographic order."""
    cands = sorted(set(int(m) for m in candidate_orders))
    for m in cands:
        if m < 2 or m & (m - 1):
            raise ValueError(f"candidate order {m} is not a power of two >= 2")
    if n_columns < 1 or n_columns & (n_columns - 1):
        raise ValueError("n_columns must be a power of two")
    target = n_columns * (xi_bar - math.log2(n_columns))
    if abs(target - round(target)) > 1e-9:
        return []
    target = int(round(target))
    logs = {m: int(math.log2(m)) for m in cands}
    return [
        RateAllocation.from_orders(combo)
        for combo in itertools.product(cands, repeat=n_columns)
        if sum(logs[m] for m in combo) == target
    ]


def _tie_key(alloc: RateAllocation):
    return (max(alloc.per_column_orders), alloc.per_column_orders)


def _argmax(scored: list[tuple[float, RateAllocation, object]]):
    """Largest score; near-equal scores (rel 1e-12) fall back to the smallest max order, then lexicographic."""
    top = max(s for s, _, _ in scored)
    tol = 1e-12 * max(abs(top), 1.0)
    tied = [item for item in scored if item[0] >= top - tol]
    return min(tied, key=lambda item: _tie_key(item[1]))


def _feasible(n_columns, xi_bar, candidates):
    allocs = enumerate_allocations(n_columns, xi_bar, candidates)
    if not allocs:
        raise InfeasibleRateError(
            f"no allocation of orders {sorted(candidates)} over {n_columns} columns averages {xi_bar} bits"
        )
    return allocs


def optimize_improved(
    h_cols: np.ndarray,
    xi_bar: float,
    candidates: Sequence[int] = DEFAULT_CANDIDATES,
    pair_mode: str = "all",
    family: str = "mixed",
    normalize: bool = True,
) -> tuple[RateAllocation, DistanceReport]:
    h = np.asarray(h_cols, dtype=complex)
    scored = []
    for alloc in _feasible(h.shape[1], xi_bar, candidates):
        rep = min_distance(h, alloc, constellations_for(alloc, family, normalize), pair_mode)
        scored.append((rep.d_min_sq, alloc, rep))
    _, alloc, rep = _argmax(scored)
    return alloc, rep


def si_objective(
    h_cols: np.ndarray,
    alloc: RateAllocation,
    constellations: Sequence[Constellation] | None = None,
    pair_mode: str = "all",
) -> float:
    """Simplified distance objective.

    Cross-column pairs use ``tau1 + tau2 - max 2 Re{s conj(s_hat) tau3}``,
    i.e. symbol energies taken as 1. In ``"all"`` mode the same-column
    distances ``tau_n |s - s_hat|^2`` also enter the minimum; they need no
    channel-correlation term, so nothing is simplified there.
    """
    h = _check(h_cols, alloc.n_columns)
    cons = list(constellations) if constellations is not None else constellations_for(alloc)
    vals = []
    for n, n_hat in itertools.permutations(range(alloc.n_columns), 2):
        t1, t2, t3 = channel_taus(h, n, n_hat)
        cross = 2.0 * np.real(cons[n].points[:, None] * np.conj(cons[n_hat].points[None, :]) * t3)
        if pair_mode == "strict":
            k = min(cross.shape)
            cross[np.arange(k), np.arange(k)] = -np.inf
        vals.append(t1 + t2 - float(cross.max()))
    if pair_mode == "all":
        for n in range(alloc.n_columns):
            t1 = float(np.vdot(h[:, n], h[:, n]).real)
            vals.append(t1 * cons[n].min_distance_sq() if cons[n].order > 1 else math.inf)
    if not vals:
        raise ValueError("SI objective needs at least two columns")
    return min(vals)


def optimize_si(
    h_cols: np.ndarray,
    xi_bar: float,
    candidates: Sequence[int] = DEFAULT_CANDIDATES,
    pair_mode: str = "all",
    family: str = "mixed",
    normalize: bool = True,
) -> tuple[RateAllocation, float]:
    h = np.asarray(h_cols, dtype=complex)
    scored = []
    for alloc in _feasible(h.shape[1], xi_bar, candidates):
        scored.append((si_objective(h, alloc, constellations_for(alloc, family, normalize), pair_mode), alloc, None))
    obj, alloc, _ = _argmax(scored)
    return alloc, obj
