"""Bit mapping, signal synthesis and exhaustive ML detection for TRIS-SM.

Columns and symbols are indexed from 0. The spatial bits select the active
column in natural binary; the symbol bits select a point of that column's
constellation through its Gray label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, complex_normal
from .constellation import Constellation
from .core import BitWord, SystemConfig, bits_to_int, int_to_bits

__all__ = [
    "TrisSmCodeword",
    "CandidateSet",
    "per_column",
    "map_bits",
    "demap",
    "make_codeword",
    "all_codewords",
    "transmit",
    "transmit_full",
    "add_noise",
    "ml_detect",
    "ml_detect_batch",
    "hamming",
    "word_errors",
]


@dataclass(frozen=True)
class TrisSmCodeword:
    col: int
    sym: int
    symbol: complex
    word: BitWord


def per_column(constellations, n_columns: int) -> list[Constellation]:
    """Broadcast a single constellation to every column, or check a per-column list."""
    if isinstance(constellations, Constellation):
        return [constellations] * n_columns
    cons = list(constellations)
    if len(cons) != n_columns:
        raise ValueError(f"{len(cons)} constellations given for {n_columns} columns")
    return cons


def _n_columns(cfg_or_n) -> int:
    return cfg_or_n.n_columns if isinstance(cfg_or_n, SystemConfig) else int(cfg_or_n)


def make_codeword(col: int, sym: int, n_columns: int, constellations) -> TrisSmCodeword:
    cons = per_column(constellations, n_columns)
    c = cons[col]
    sb = int(math.log2(n_columns))
    bits = int_to_bits(col, sb) + c.label_bits(sym)
    return TrisSmCodeword(col, sym, complex(c.points[sym]), BitWord(bits, sb, c.bits_per_symbol))


def map_bits(w, cfg_or_n, constellations) -> TrisSmCodeword:
    """Map one channel use of bits to its codeword.

    ``w`` is a :class:`BitWord` or a plain bit sequence. With per-column
    orders the expected length depends on the column the spatial bits pick.
    """
    n = _n_columns(cfg_or_n)
    cons = per_column(constellations, n)
    bits = tuple(w.bits) if isinstance(w, BitWord) else tuple(int(b) for b in w)
    sb = int(math.log2(n))
    if len(bits) < sb:
        raise ValueError(f"word of {len(bits)} bits is shorter than the {sb} spatial bits")
    col = bits_to_int(bits[:sb])
    c = cons[col]
    if len(bits) != sb + c.bits_per_symbol:
        raise ValueError(
            f"column {col} expects {sb + c.bits_per_symbol} bits, got {len(bits)}"
        )
    sym = int(c.index_of_label[bits_to_int(bits[sb:])])
    return TrisSmCodeword(col, sym, complex(c.points[sym]), BitWord(bits, sb, c.bits_per_symbol))


def demap(cw: TrisSmCodeword) -> BitWord:
    return cw.word


def all_codewords(n_columns: int, constellations) -> list[TrisSmCodeword]:
    """Every codeword, ordered by column then symbol index."""
    cons = per_column(constellations, n_columns)
    return [make_codeword(n, m, n_columns, cons) for n in range(n_columns) for m in range(cons[n].order)]


def transmit(cw: TrisSmCodeword, ch: ChannelRealization) -> np.ndarray:
    return ch.h_cols[:, cw.col] * cw.symbol


def transmit_full(cw: TrisSmCodeword, h_full: np.ndarray, n_columns: int) -> np.ndarray:
    """Same signal built from the length-L transmit vector (symbol on every unit of the column)."""
    L = h_full.shape[1]
    ln = L // n_columns
    x = np.zeros(L, dtype=complex)
    x[cw.col * ln : (cw.col + 1) * ln] = cw.symbol
    return h_full @ x


def add_noise(x: np.ndarray, n0: float, stream: np.random.Generator) -> np.ndarray:
    if n0 <= 0:
        raise ValueError("noise variance must be positive")
    x = np.asarray(x, dtype=complex)
    return x + complex_normal(stream, x.shape, n0)


class CandidateSet:
    """Flattened signal set: one entry per (column, symbol) pair, lexicographic order."""

    def __init__(self, n_columns: int, constellations):
        self.n_columns = n_columns
        self.constellations = per_column(constellations, n_columns)
        cols, syms, pts, labels, nbits = [], [], [], [], []
        for n, c in enumerate(self.constellations):
            for m in range(c.order):
                cols.append(n)
                syms.append(m)
                pts.append(c.points[m])
                labels.append(int(c.labels[m]))
                nbits.append(c.bits_per_symbol)
        self.col = np.array(cols, dtype=np.int64)
        self.sym = np.array(syms, dtype=np.int64)
        self.points = np.array(pts, dtype=complex)
        self.labels = np.array(labels, dtype=np.int64)
        self.symbol_bits = np.array(nbits, dtype=np.int64)
        self.spatial_bits = int(math.log2(n_columns))
        if not len(self.col):
            raise ValueError("candidate set is empty")

    def __len__(self):
        return len(self.col)

    def index(self, col: int, sym: int) -> int:
        hits = np.flatnonzero((self.col == col) & (self.sym == sym))
        if not len(hits):
            raise KeyError((col, sym))
        return int(hits[0])

    def codeword(self, k: int) -> TrisSmCodeword:
        return make_codeword(int(self.col[k]), int(self.sym[k]), self.n_columns, self.constellations)


def ml_detect(y: np.ndarray, ch: ChannelRealization, candidates: CandidateSet) -> TrisSmCodeword:
    """argmin over the signal set of ||y - h_n s_m||^2; ties go to the lowest (n, m)."""
    r = ch.h_cols[:, candidates.col] * candidates.points
    d = np.sum(np.abs(np.asarray(y)[:, None] - r) ** 2, axis=0)
    return candidates.codeword(int(np.argmin(d)))


def ml_detect_batch(y: np.ndarray, h_cols: np.ndarray, candidates: CandidateSet) -> np.ndarray:
    """Vectorised detection.

    ``y`` is (T, N_r); ``h_cols`` is (T, N_r, N) or a single (N_r, N) matrix.
    Returns candidate indices (T,).
    """
    if h_cols.ndim == 2:
        r = h_cols[:, candidates.col] * candidates.points  # (N_r, K)
        diff = y[:, :, None] - r[None]
    else:
        r = h_cols[:, :, candidates.col] * candidates.points
        diff = y[:, :, None] - r
    d = diff.real**2 + diff.imag**2
    return np.argmin(d.sum(axis=1), axis=1)


def hamming(cw1: TrisSmCodeword, cw2: TrisSmCodeword) -> int:
    if len(cw1.word) != len(cw2.word):
        raise ValueError("codewords have different word lengths")
    return sum(a != b for a, b in zip(cw1.word.bits, cw2.word.bits))


def word_errors(tx_col, tx_label, tx_nbits, rx_col, rx_label, rx_nbits):
    """Bit errors between transmitted and detected words (vectorised).

    Symbol labels are compared MSB-aligned over the transmitted length; when
    the detected column carries fewer symbol bits, the missing ones count as
    errors. With equal lengths this is the plain Hamming distance.
    """
    tx_col, tx_label, tx_nbits, rx_col, rx_label, rx_nbits = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.int64) for a in (tx_col, tx_label, tx_nbits, rx_col, rx_label, rx_nbits))
    )
    spatial = _popcount(tx_col ^ rx_col)
    shift = rx_nbits - tx_nbits
    longer = shift >= 0
    aligned_rx = np.where(longer, rx_label >> np.maximum(shift, 0), rx_label)
    aligned_tx = np.where(longer, tx_label, tx_label >> np.maximum(-shift, 0))
    sym = _popcount(aligned_tx ^ aligned_rx) + np.maximum(-shift, 0)
    return spatial + sym


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    count = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        count += (a & np.uint64(1)).astype(np.int64)
        a = a >> np.uint64(1)
    return count
