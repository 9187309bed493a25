"""Built-in scenario sets at desktop scale."""

from __future__ import annotations

from .channel import REFERENCE_H_2X2, channel_to_json

__all__ = ["PRESETS", "list_presets", "get_preset"]


def _grid(start, stop, step=2):
    return {"start": start, "stop": stop, "step": step}


PRESETS: dict[str, dict] = {
    "fig2": {
        "description": "Column keying only (M=1, N=2, N_r=1) for L_N in {2, 4}; union bound is exact here",
        "mode": "simulate",
        "scenarios": [
            {"name": f"LN{ln}", "n_columns": 2, "rows_per_column": ln, "n_rx": 1, "mod_order": 1,
             "mod_kind": "psk", "snr_grid_db": _grid(0, 30)}
            for ln in (2, 4)
        ],
    },
    "fig3": {
        "description": "VB vs EB vs asymptotic vs Monte Carlo, BPSK, N=4, L_N=4, N_r=4",
        "mode": "simulate",
        "scenarios": [
            {"name": "bpsk", "n_columns": 4, "rows_per_column": 4, "n_rx": 4, "mod_order": 2,
             "mod_kind": "psk", "snr_grid_db": _grid(-10, 10)}
        ],
    },
    "fig4": {
        "description": "Column-count sweep N in {2, 4, 8}, BPSK, L_N=4, N_r=4",
        "mode": "simulate",
        "scenarios": [
            {"name": f"N{n}", "n_columns": n, "rows_per_column": 4, "n_rx": 4, "mod_order": 2,
             "mod_kind": "psk", "snr_grid_db": _grid(-10, 10)}
            for n in (2, 4, 8)
        ],
    },
    "fig5": {
        "description": "Modulation sweep QPSK / 8PSK / 16QAM with N=4, L_N=4, N_r=4",
        "mode": "simulate",
        "scenarios": [
            {"name": name, "n_columns": 4, "rows_per_column": 4, "n_rx": 4, "mod_order": m,
             "mod_kind": kind, "snr_grid_db": _grid(-10, 14)}
            for name, m, kind in (("qpsk", 4, "psk"), ("8psk", 8, "psk"), ("16qam", 16, "qam"))
        ],
    },
    "fig6": {
        "description": "Receive-antenna sweep N_r in {1, 2, 4}, BPSK, N=4, L_N=4",
        "mode": "simulate",
        "scenarios": [
            {"name": f"Nr{nr}", "n_columns": 4, "rows_per_column": 4, "n_rx": nr, "mod_order": 2,
             "mod_kind": "psk", "snr_grid_db": _grid(-10, 20)}
            for nr in (1, 2, 4)
        ],
    },
    "fig7": {
        "description": "Rate allocation on the reference 2x2 channel at 3 bpcu: uniform QPSK vs improved vs SI",
        "mode": "compare",
        "scenarios": [
            {"name": "3bpcu", "n_columns": 2, "rows_per_column": 4, "n_rx": 2,
             "channel": channel_to_json(REFERENCE_H_2X2), "xi_bar": 3, "candidate_orders": [2, 4, 8],
             "extra_allocations": [[8, 2], [2, 8]], "snr_grid_db": _grid(-10, 20)}
        ],
    },
}


def list_presets() -> list[tuple[str, str]]:
    return [(name, p["description"]) for name, p in PRESETS.items()]


def get_preset(name: str) -> dict:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
