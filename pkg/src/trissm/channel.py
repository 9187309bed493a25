"""Rayleigh channel draws and their reduction to per-column effective channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, SystemConfig

__all__ = [
    "ChannelRealization",
    "draw_channel",
    "draw_column_channels",
    "column_sums",
    "complex_normal",
    "fixed_channel",
    "expand_full",
    "channel_from_json",
    "channel_to_json",
    "REFERENCE_H_2X2",
]

# Column-level 2x2 channel used for the improved-scheme comparison.
REFERENCE_H_2X2 = np.array(
    [
        [-2.1550 - 1.8483j, -0.2703 + 2.5219j],
        [-0.1560 + 2.2516j, -0.4722 - 1.4695j],
    ]
)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """``h_full`` is N_r x L per-unit gains (None for fixed column-level channels);
    ``h_cols`` is N_r x N, column n being the sum of its L_N unit channels."""

    h_cols: np.ndarray
    h_full: np.ndarray | None = None

    @property
    def n_rx(self) -> int:
        return self.h_cols.shape[0]

    @property
    def n_columns(self) -> int:
        return self.h_cols.shape[1]


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """CN(0, var) samples: real and imaginary parts each N(0, var/2)."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    z = rng.standard_normal((*shape, 2))
    return np.sqrt(var / 2.0) * (z[..., 0] + 1j * z[..., 1])


def column_sums(h_full: np.ndarray, n_columns: int) -> np.ndarray:
    """Sum consecutive blocks of L_N unit columns. Works on (..., N_r, L) arrays."""
    *lead, n_rx, L = h_full.shape
    if L % n_columns:
        raise ConfigError(f"{L} units cannot be split into {n_columns} columns")
    return h_full.reshape(*lead, n_rx, n_columns, L // n_columns).sum(axis=-1)


def draw_channel(cfg: SystemConfig, stream: np.random.Generator) -> ChannelRealization:
    h_full = complex_normal(stream, (cfg.n_rx, cfg.n_total_units))
    return ChannelRealization(h_cols=column_sums(h_full, cfg.n_columns), h_full=h_full)


def draw_column_channels(cfg: SystemConfig, stream: np.random.Generator, size: int) -> np.ndarray:
    """Batch of ``size`` independent realizations, reduced to shape (size, N_r, N)."""
    h_full = complex_normal(stream, (size, cfg.n_rx, cfg.n_total_units))
    return column_sums(h_full, cfg.n_columns)


def fixed_channel(values, n_columns: int | None = None, n_rx: int | None = None) -> ChannelRealization:
    """Wrap a given N_r x N column-level channel."""
    h = np.array(values, dtype=complex)
    if h.ndim != 2:
        raise ConfigError(f"channel must be a 2-D matrix, got shape {h.shape}")
    if n_columns is not None and h.shape[1] != n_columns:
        raise ConfigError(f"channel has {h.shape[1]} columns, configuration expects {n_columns}")
    if n_rx is not None and h.shape[0] != n_rx:
        raise ConfigError(f"channel has {h.shape[0]} rows, configuration expects n_rx={n_rx}")
    if not np.all(np.isfinite(h)):
        raise ConfigError("channel entries must be finite")
    h.setflags(write=False)
    return ChannelRealization(h_cols=h, h_full=None)


def expand_full(ch: ChannelRealization, rows_per_column: int) -> np.ndarray:
    """Per-unit channel consistent with ``ch.h_cols``; fixed channels are split evenly."""
    if ch.h_full is not None:
        return ch.h_full
    return np.repeat(ch.h_cols / rows_per_column, rows_per_column, axis=1)


def channel_from_json(obj) -> np.ndarray:
    """Decode a channel matrix.

    Two layouts are accepted: ``{"shape": [rows, cols], "entries": [[re, im], ...]}``
    with entries row-major, or a list of rows each holding ``[re, im]`` pairs.
    """
    try:
        if isinstance(obj, dict):
            rows, cols = (int(v) for v in obj["shape"])
            entries = obj["entries"]
            if len(entries) != rows * cols:
                raise ConfigError(f"field 'channel.entries' has {len(entries)} values, shape needs {rows * cols}")
            flat = np.array([complex(float(re), float(im)) for re, im in entries])
            return flat.reshape(rows, cols)
        rows = [[complex(float(re), float(im)) for re, im in row] for row in obj]
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field 'channel' is malformed: {exc}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise ConfigError("field 'channel' rows must be non-empty and equally long")
    return np.array(rows)


def channel_to_json(h: np.ndarray) -> dict:
    h = np.asarray(h, dtype=complex)
    return {"shape": list(h.shape), "entries": [[float(z.real), float(z.imag)] for z in h.ravel()]}
