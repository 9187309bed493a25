"""Chunked, seed-deterministic Monte Carlo BER estimation.

Each SNR point is simulated in chunks of ``CHUNK_TRIALS`` channel uses. Chunk
``c`` of SNR index ``i`` draws everything from ``substream(seed, tag, i, c)``
and chunk tallies are reduced in chunk order, with the stop rule checked
after every chunk. Workers only change which thread computes a chunk, so the
result does not depend on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import column_sums, complex_normal
from .constellation import make_constellation
from .core import SystemConfig, snr_db_to_point, substream
from .txrx import CandidateSet, ml_detect_batch, per_column, word_errors

__all__ = [
    "CHUNK_TRIALS",
    "StopRule",
    "SimResult",
    "simulate_ber",
    "simulate_fixed_channel_ber",
    "default_workers",
]

CHUNK_TRIALS = 1 << 16
_BLOCK = 1 << 13  # draws within a chunk happen in blocks of this size, in a fixed order


@dataclass(frozen=True)
class StopRule:
    """Stop a point once ``min_bit_errors`` are seen or a trial/bit budget is spent."""

    min_bit_errors: int = 200
    max_trials: int | None = None
    max_bits: int | None = 10**8

    def __post_init__(self):
        if self.min_bit_errors < 1:
            raise ValueError("min_bit_errors must be positive")
        if self.max_trials is not None and self.max_trials < 1:
            raise ValueError("max_trials must be positive")
        if self.max_bits is not None and self.max_bits < 1:
            raise ValueError("max_bits must be positive")
        if self.max_trials is None and self.max_bits is None:
            raise ValueError("at least one of max_trials / max_bits is required")

    def done(self, trials: int, errors: int, bits: int) -> bool:
        if errors >= self.min_bit_errors:
            return True
        if self.max_trials is not None and trials >= self.max_trials:
            return True
        return self.max_bits is not None and bits >= self.max_bits


@dataclass(frozen=True)
class SimResult:
    snr_db: float
    trials: int
    bit_errors: int
    bits_total: int
    ber: float
    ci95_half_width: float

    @classmethod
    def from_counts(cls, snr_db: float, trials: int, bit_errors: int, bits_total: int) -> "SimResult":
        ber = bit_errors / bits_total if bits_total else 0.0
        ci = 1.96 * math.sqrt(ber * (1.0 - ber) / bits_total) if bits_total else 0.0
        return cls(float(snr_db), int(trials), int(bit_errors), int(bits_total), ber, ci)


def default_workers() -> int:
    v = os.environ.get("TRISSM_WORKERS")
    if not v:
        return 1
    try:
        n = int(v)
    except ValueError:
        raise ValueError(f"TRISSM_WORKERS must be an integer, got {v!r}") from None
    return max(1, n)


def _chunk_sizes(stop: StopRule):
    """Yield the trial count of each successive chunk."""
    c = 0
    while True:
        n = CHUNK_TRIALS
        if stop.max_trials is not None:
            n = min(n, stop.max_trials - c * CHUNK_TRIALS)
            if n <= 0:
                return
        yield c, n
        c += 1


def _run_point(run_chunk: Callable[[int, int], tuple[int, int]], stop: StopRule, workers: int):
    trials = errors = bits = 0
    sizes = _chunk_sizes(stop)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            wave = [cn for _, cn in zip(range(workers), sizes)]
            if not wave:
                break
            if pool is None:
                results = [run_chunk(c, n) for c, n in wave]
            else:
                results = list(pool.map(lambda cn: run_chunk(*cn), wave))
            for (c, n), (e, b) in zip(wave, results):
                trials += n
                errors += e
                bits += b
                if stop.done(trials, errors, bits):
                    return trials, errors, bits
    finally:
        if pool is not None:
            pool.shutdown()
    return trials, errors, bits


def _draw_words(rng: np.random.Generator, n: int, cand: CandidateSet, orders: np.ndarray):
    """Random bits for ``n`` channel uses, returned as candidate indices plus bit counts.

    The spatial bits pick the column (natural binary); the next
    ``log2 M_n`` bits pick the symbol through its Gray label.
    """
    sb = cand.spatial_bits
    max_nb = int(cand.symbol_bits.max())
    bits = rng.integers(0, 2, size=(n, sb + max_nb), dtype=np.int64)
    weights = 1 << np.arange(sb + max_nb - 1, -1, -1)
    col = (bits[:, :sb] @ weights[max_nb:]) if sb else np.zeros(n, dtype=np.int64)
    nb = np.log2(orders).astype(np.int64)[col]
    sym_field = bits[:, sb:] @ weights[sb:] if max_nb else np.zeros(n, dtype=np.int64)
    label = sym_field >> (max_nb - nb)
    offsets = np.concatenate([[0], np.cumsum(orders)[:-1]])
    index_of_label = np.concatenate(
        [c.index_of_label + off for c, off in zip(cand.constellations, offsets)]
    )
    label_offsets = offsets[col]
    k = index_of_label[label_offsets + label]
    return k, sb + nb


def _chunk_errors(rng, n, cand, orders, n0, h_source):
    """Simulate ``n`` channel uses; ``h_source(rng, size)`` returns (size, N_r, N) or a fixed (N_r, N)."""
    errors = bits = 0
    done = 0
    while done < n:
        b = min(_BLOCK, n - done)
        k, nbits = _draw_words(rng, b, cand, orders)
        h = h_source(rng, b)
        if h.ndim == 2:
            x = h[:, cand.col[k]].T * cand.points[k][:, None]
        else:
            x = h[np.arange(b), :, cand.col[k]] * cand.points[k][:, None]
        y = x + complex_normal(rng, x.shape, n0)
        kh = ml_detect_batch(y, h, cand)
        e = word_errors(cand.col[k], cand.labels[k], cand.symbol_bits[k], cand.col[kh], cand.labels[kh], cand.symbol_bits[kh])
        errors += int(e.sum())
        bits += int(nbits.sum())
        done += b
    return errors, bits


def simulate_ber(
    cfg: SystemConfig,
    constellations=None,
    snr_grid: Sequence[float] | None = None,
    stop: StopRule | None = None,
    seed: int = 0,
    workers: int | None = None,
    per_unit: bool = False,
) -> list[SimResult]:
    """BER of the TRIS-SM link with a fresh Rayleigh channel on every channel use.

    Detection only sees the column sums, each CN(0, L_N), so they are drawn
    directly. ``per_unit=True`` draws all L unit gains and sums them instead
    (same distribution, different random stream, L_N times slower).
    """
    if constellations is None:
        constellations = make_constellation(cfg.mod_order, cfg.mod_kind)
    cons = per_column(constellations, cfg.n_columns)
    cand = CandidateSet(cfg.n_columns, cons)
    orders = np.array([c.order for c in cons])
    stop = stop or StopRule()
    workers = workers or default_workers()
    grid = cfg.snr_grid_db if snr_grid is None else tuple(snr_grid)

    def h_source(rng, size):
        if per_unit:
            return column_sums(complex_normal(rng, (size, cfg.n_rx, cfg.n_total_units)), cfg.n_columns)
        return complex_normal(rng, (size, cfg.n_rx, cfg.n_columns), var=cfg.rows_per_column)

    out = []
    for i, snr_db in enumerate(grid):
        n0 = snr_db_to_point(snr_db).n0

        def run_chunk(c, n, i=i, n0=n0):
            return _chunk_errors(substream(seed, "ber", i, c), n, cand, orders, n0, h_source)

        trials, errors, bits = _run_point(run_chunk, stop, workers)
        out.append(SimResult.from_counts(snr_db, trials, errors, bits))
    return out


def simulate_fixed_channel_ber(
    h_cols,
    constellations,
    snr_grid: Sequence[float],
    stop: StopRule | None = None,
    seed: int = 0,
    workers: int | None = None,
) -> list[SimResult]:
    """BER over one fixed column-level channel, allowing a different order per column.

    Each channel use consumes the spatial bits and then as many symbol bits
    as the selected column's order carries; the BER denominator counts every
    consumed bit.
    """
    h = np.asarray(h_cols, dtype=complex)
    if h.ndim != 2:
        raise ValueError("h_cols must be an N_r x N matrix")
    n_columns = h.shape[1]
    if n_columns & (n_columns - 1):
        raise ValueError("number of columns must be a power of two")
    cons = per_column(constellations, n_columns)
    cand = CandidateSet(n_columns, cons)
    orders = np.array([c.order for c in cons])
    stop = stop or StopRule()
    workers = workers or default_workers()

    def h_source(rng, size):
        return h

    out = []
    for i, snr_db in enumerate(snr_grid):
        n0 = snr_db_to_point(snr_db).n0

        def run_chunk(c, n, i=i, n0=n0):
            return _chunk_errors(substream(seed, "fixed", i, c), n, cand, orders, n0, h_source)

        trials, errors, bits = _run_point(run_chunk, stop, workers)
        out.append(SimResult.from_counts(snr_db, trials, errors, bits))
    return out
