"""Unit-energy PSK/QAM constellations with Gray bit labels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import bits_to_int, int_to_bits, is_power_of_two

__all__ = [
    "Constellation",
    "make_psk",
    "make_qam",
    "make_constellation",
    "default_for_order",
    "unit_symbol",
    "symbol_for_bits",
    "gray",
    "is_supported_qam_order",
]


def gray(k: int) -> int:
    return k ^ (k >> 1)


def is_supported_qam_order(M: int) -> bool:
    if not is_power_of_two(M) or M < 4:
        return False
    return M == 8 or int(math.log2(M)) % 2 == 0


@dataclass(frozen=True, eq=False)
class Constellation:
    """Symbol alphabet of one column.

    ``points[i]`` carries the bit label ``labels[i]`` (an integer read
    MSB-first on ``bits_per_symbol`` bits).
    """

    order: int
    kind: str
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        labs = np.asarray(self.labels, dtype=np.int64)
        pts.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)
        if pts.shape != (self.order,) or labs.shape != (self.order,):
            raise ValueError("points and labels must both have length `order`")
        if sorted(labs.tolist()) != list(range(self.order)):
            raise ValueError("labels must be a bijection onto all bit words")
        inv = np.empty(self.order, dtype=np.int64)
        inv[labs] = np.arange(self.order)
        inv.setflags(write=False)
        object.__setattr__(self, "_index_of_label", inv)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def index_of_label(self) -> np.ndarray:
        return self._index_of_label

    @property
    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def name(self) -> str:
        if self.order == 1:
            return "const"
        if self.kind == "psk":
            return {2: "BPSK", 4: "QPSK"}.get(self.order, f"{self.order}PSK")
        return f"{self.order}QAM"

    def label_bits(self, m: int) -> tuple[int, ...]:
        return int_to_bits(int(self.labels[m]), self.bits_per_symbol)

    def min_distance_sq(self) -> float:
        if self.order < 2:
            return 0.0
        d = np.abs(self.points[:, None] - self.points[None, :]) ** 2
        return float(d[~np.eye(self.order, dtype=bool)].min())

    def __repr__(self):
        return f"Constellation({self.name})"


def unit_symbol() -> Constellation:
    """The degenerate M=1 alphabet: a constant symbol 1 and zero bits."""
    return Constellation(order=1, kind="psk", points=np.array([1.0 + 0j]), labels=np.array([0]))


def make_psk(M: int) -> Constellation:
    """Unit-modulus M-PSK, Gray labelled around the circle.

    QPSK sits on the diagonals; every other order starts at angle 0.
    """
    if not is_power_of_two(M) or M < 2:
        raise ValueError(f"PSK order must be a power of two >= 2, got {M}")
    offset = math.pi / 4 if M == 4 else 0.0
    k = np.arange(M)
    points = np.exp(1j * (2 * np.pi * k / M + offset))
    labels = np.array([gray(i) for i in range(M)])
    return Constellation(order=M, kind="psk", points=points, labels=labels)


def make_qam(M: int, normalize: bool = True) -> Constellation:
    """Square M-QAM (M = 4, 16, 64, ...) or the 4x2 rectangular 8-QAM.

    Gray labels are applied per axis, in-phase bits first. With
    ``normalize=False`` the raw odd-integer grid is returned (mean energy
    2(M-1)/3 for square orders, 6 for 8-QAM).
    """
    if not is_supported_qam_order(M):
        raise ValueError(f"unsupported QAM order {M}")
    b = int(math.log2(M))
    if M == 8:
        bi, bq = 2, 1
    else:
        bi = bq = b // 2
    n_i, n_q = 1 << bi, 1 << bq
    lev_i = 2 * np.arange(n_i) - (n_i - 1)
    lev_q = 2 * np.arange(n_q) - (n_q - 1)
    points = (lev_i[:, None] + 1j * lev_q[None, :]).ravel()
    labels = np.array([(gray(i) << bq) | gray(q) for i in range(n_i) for q in range(n_q)])
    if normalize:
        points = points / math.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation(order=M, kind="qam", points=points, labels=labels)


def make_constellation(M: int, kind: str = "psk", normalize: bool = True) -> Constellation:
    kind = kind.lower()
    if M == 1:
        return unit_symbol()
    if kind == "psk":
        return make_psk(M)
    if kind == "qam":
        return make_qam(M, normalize=normalize)
    raise ValueError(f"unknown constellation kind {kind!r}")


def default_for_order(M: int, normalize: bool = True) -> Constellation:
    """Family used by the rate-allocation search: PSK up to 4 points, QAM above."""
    if M <= 4:
        return make_constellation(M, "psk")
    return make_qam(M, normalize=normalize)


def symbol_for_bits(c: Constellation, bits: Sequence[int]) -> complex:
    if len(bits) != c.bits_per_symbol:
        raise ValueError(f"{c.name} takes {c.bits_per_symbol} bits, got {len(bits)}")
    return complex(c.points[c.index_of_label[bits_to_int(bits)]])
