"""Scenario configuration, SNR conventions, bit-word helpers and RNG substreams.

Everything downstream takes a :class:`SystemConfig`. SNR is handled as a
linear ``rho`` with noise variance ``n0 = 1 / rho``: constellations have unit
average energy, so ``rho`` is the per-unit transmit SNR.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "SystemConfig",
    "SnrPoint",
    "BitWord",
    "validate_config",
    "snr_db_to_point",
    "default_snr_grid",
    "is_power_of_two",
    "int_to_bits",
    "bits_to_int",
    "substream",
]


class ConfigError(ValueError):
    """Raised when a scenario violates a dimension or order invariant."""


def is_power_of_two(k: int) -> bool:
    return isinstance(k, (int, np.integer)) and k >= 1 and (k & (k - 1)) == 0


def default_snr_grid() -> tuple[float, ...]:
    return tuple(float(s) for s in range(-10, 31, 2))


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and modulation of one TRIS-SM link.

    ``n_total_units`` may be omitted, in which case it is filled in as
    ``n_columns * rows_per_column``. Call :func:`validate_config` (or
    :meth:`validated`) before use; construction alone does not check.
    """

    n_columns: int
    rows_per_column: int
    n_rx: int
    mod_order: int = 1
    mod_kind: str = "psk"
    snr_grid_db: tuple[float, ...] = field(default_factory=default_snr_grid)
    n_total_units: int | None = None

    def __post_init__(self):
        if self.n_total_units is None:
            object.__setattr__(self, "n_total_units", self.n_columns * self.rows_per_column)
        object.__setattr__(self, "mod_kind", str(self.mod_kind).lower())
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))

    @property
    def spatial_bits(self) -> int:
        return int(math.log2(self.n_columns))

    @property
    def symbol_bits(self) -> int:
        return int(math.log2(self.mod_order))

    @property
    def bits_per_use(self) -> int:
        return self.spatial_bits + self.symbol_bits

    def validated(self) -> "SystemConfig":
        return validate_config(self)

    def replace(self, **changes) -> "SystemConfig":
        fields = dict(
            n_columns=self.n_columns,
            rows_per_column=self.rows_per_column,
            n_rx=self.n_rx,
            mod_order=self.mod_order,
            mod_kind=self.mod_kind,
            snr_grid_db=self.snr_grid_db,
            n_total_units=None,
        )
        fields.update(changes)
        return SystemConfig(**fields)

    def to_dict(self) -> dict:
        return {
            "n_columns": self.n_columns,
            "rows_per_column": self.rows_per_column,
            "n_total_units": self.n_total_units,
            "n_rx": self.n_rx,
            "mod_order": self.mod_order,
            "mod_kind": self.mod_kind,
            "snr_grid_db": list(self.snr_grid_db),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        """Build from a snake_case mapping, as found in JSON scenario files."""
        known = {"n_columns", "rows_per_column", "n_total_units", "n_rx", "mod_order", "mod_kind", "snr_grid_db"}
        for name in ("n_columns", "rows_per_column", "n_rx"):
            if name not in d:
                raise ConfigError(f"missing required field '{name}'")
        kwargs = {k: v for k, v in d.items() if k in known}
        if "snr_grid_db" in kwargs:
            kwargs["snr_grid_db"] = parse_snr_grid(kwargs["snr_grid_db"])
        for name in ("n_columns", "rows_per_column", "n_rx", "mod_order", "n_total_units"):
            if name in kwargs and kwargs[name] is not None:
                v = kwargs[name]
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(f"field '{name}' must be an integer, got {v!r}")
        return validate_config(cls(**kwargs))


def parse_snr_grid(spec) -> tuple[float, ...]:
    """Accept an explicit list of dB values or ``{"start", "stop", "step"}`` (stop inclusive)."""
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as exc:
            raise ConfigError(f"field 'snr_grid_db' range is missing key {exc}") from None
        if step <= 0:
            raise ConfigError("field 'snr_grid_db' needs a positive step")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 10) for k in range(n))
    if not isinstance(spec, (list, tuple)):
        raise ConfigError("field 'snr_grid_db' must be a list or a {start, stop, step} object")
    try:
        return tuple(float(s) for s in spec)
    except (TypeError, ValueError):
        raise ConfigError("field 'snr_grid_db' must contain numbers") from None


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if every invariant holds, else raise :class:`ConfigError`."""
    for name in ("n_columns", "rows_per_column", "n_rx", "mod_order", "n_total_units"):
        v = getattr(cfg, name)
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    if cfg.n_total_units != cfg.n_columns * cfg.rows_per_column:
        raise ConfigError(
            f"n_total_units ({cfg.n_total_units}) != n_columns * rows_per_column "
            f"({cfg.n_columns} * {cfg.rows_per_column})"
        )
    if not is_power_of_two(cfg.n_columns):
        raise ConfigError(f"n_columns must be a power of two for bit mapping, got {cfg.n_columns}")
    if not is_power_of_two(cfg.mod_order):
        raise ConfigError(f"mod_order must be 1 or a power of two, got {cfg.mod_order}")
    if cfg.mod_kind not in ("psk", "qam"):
        raise ConfigError(f"mod_kind must be 'psk' or 'qam', got {cfg.mod_kind!r}")
    if cfg.mod_kind == "qam" and cfg.mod_order > 1:
        from .constellation import is_supported_qam_order

        if not is_supported_qam_order(cfg.mod_order):
            raise ConfigError(f"mod_order {cfg.mod_order} is not a supported QAM order")
    if not all(math.isfinite(s) for s in cfg.snr_grid_db):
        raise ConfigError("snr_grid_db must hold finite values")
    return cfg


@dataclass(frozen=True)
class SnrPoint:
    rho: float
    n0: float

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.rho)


def snr_db_to_point(snr_db: float) -> SnrPoint:
    if not math.isfinite(snr_db):
        raise ValueError(f"SNR must be finite, got {snr_db}")
    rho = 10.0 ** (snr_db / 10.0)
    return SnrPoint(rho=rho, n0=1.0 / rho)


def int_to_bits(value: int, width: int) -> tuple[int, ...]:
    """MSB-first binary expansion of ``value`` on ``width`` bits."""
    if width == 0:
        return ()
    if not 0 <= value < (1 << width):
        raise ValueError(f"{value} does not fit in {width} bits")
    return tuple((value >> (width - 1 - k)) & 1 for k in range(width))


def bits_to_int(bits: Iterable[int]) -> int:
    v = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bit values must be 0 or 1, got {b!r}")
        v = (v << 1) | int(b)
    return v


@dataclass(frozen=True)
class BitWord:
    """One channel use worth of bits: spatial (column) bits then symbol bits."""

    bits: tuple[int, ...]
    spatial_len: int
    symbol_len: int

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if len(self.bits) != self.spatial_len + self.symbol_len:
            raise ValueError(
                f"word has {len(self.bits)} bits, expected {self.spatial_len} + {self.symbol_len}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bit values must be 0 or 1")

    @property
    def spatial(self) -> tuple[int, ...]:
        return self.bits[: self.spatial_len]

    @property
    def symbol(self) -> tuple[int, ...]:
        return self.bits[self.spatial_len :]

    def __len__(self):
        return len(self.bits)


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, tag, indices...)``.

    Streams for distinct keys are statistically independent and need no
    coordination, so chunks can be drawn by any worker in any order.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    key: Sequence[int] = (_tag_key(tag), *(int(i) for i in indices))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))
