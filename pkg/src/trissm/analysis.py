"""Pairwise error probabilities, union bound and diversity for TRIS-SM.

Two closed forms are provided for the channel-averaged pairwise error
probability (UPEP): one from the eigenvalues of the Hermitian quadratic form
of the received-signal decision statistic (``upep_vb``), one from the
per-antenna exponential model and the Craig form of the Q-function
(``upep_eb``). Both answer to ``upep_quadrature``, a direct numerical
integration of the Craig-form integral.

Everything is expressed through ``delta = ||x - x_hat||^2``, which equals the
channel-averaged pair distance ``kappa_bar`` and the linear SNR
``rho = 1 / n0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .constellation import Constellation, make_constellation
from .core import SystemConfig, snr_db_to_point
from .txrx import CandidateSet, per_column, word_errors

__all__ = [
    "PairContext",
    "EigenPair",
    "kappa_bar",
    "vb_eigenvalues",
    "upep_vb",
    "upep_eb",
    "upep_quadrature",
    "upep_asymptotic",
    "PairTable",
    "pair_table",
    "abep_union_bound",
    "abep_curves",
    "diversity_gain",
    "estimate_diversity_slope",
]

_EXACT_BINOMIAL_MAX = 30


@dataclass(frozen=True)
class PairContext:
    delta: float
    same_column: bool
    n0: float
    rho: float
    n_rx: int

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.n0 <= 0 or self.rho <= 0:
            raise ValueError("rho and n0 must be positive")
        if not math.isclose(self.rho * self.n0, 1.0, rel_tol=1e-9):
            raise ValueError("rho * n0 must equal 1")
        if self.n_rx < 1:
            raise ValueError("n_rx must be >= 1")

    @classmethod
    def at_snr(cls, delta: float, snr_db: float, n_rx: int, same_column: bool = False) -> "PairContext":
        p = snr_db_to_point(snr_db)
        return cls(delta=delta, same_column=same_column, n0=p.n0, rho=p.rho, n_rx=n_rx)

    @classmethod
    def at_n0(cls, delta: float, n0: float, n_rx: int, same_column: bool = False) -> "PairContext":
        return cls(delta=delta, same_column=same_column, n0=n0, rho=1.0 / n0, n_rx=n_rx)


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: float
    lambda_minus: float

    @property
    def degenerate(self) -> bool:
        return self.lambda_plus == 0.0 and self.lambda_minus == 0.0


def kappa_bar(s_m: complex, s_mhat: complex, same_column: bool, rows_per_column: int) -> float:
    """Channel-averaged squared distance between ``h_n s_m`` and ``h_nhat s_mhat`` per antenna."""
    if rows_per_column < 1:
        raise ValueError("rows_per_column must be >= 1")
    if same_column:
        return abs(s_m - s_mhat) ** 2 * rows_per_column
    return (abs(s_m) ** 2 + abs(s_mhat) ** 2) * rows_per_column


def vb_eigenvalues(delta: float, n0: float) -> EigenPair:
    """Roots of ``lambda^2 + delta*lambda - n0*delta = 0``.

    The positive root is formed from the product of roots to avoid
    cancellation when ``n0 << delta``.
    """
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return EigenPair(0.0, 0.0)
    root = math.sqrt(delta * delta + 4.0 * n0 * delta)
    lam_minus = -(delta + root) / 2.0
    lam_plus = -n0 * delta / lam_minus
    return EigenPair(lam_plus, lam_minus)


def _binomials(n_rx: int) -> np.ndarray:
    """C(N_r - 1 + k, k) for k = 0..N_r-1; log-space above 30 antennas."""
    k = np.arange(n_rx)
    if n_rx <= _EXACT_BINOMIAL_MAX:
        return np.array([float(math.comb(n_rx - 1 + int(j), int(j))) for j in k])
    lg = [math.lgamma(n_rx + j) - math.lgamma(j + 1) - math.lgamma(n_rx) for j in k]
    return np.exp(lg)


def _binomial_tail(p, q, n_rx: int):
    """p^N_r * sum_k C(N_r-1+k, k) q^k, evaluated in log space for large N_r."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    k = np.arange(n_rx)
    if n_rx <= _EXACT_BINOMIAL_MAX:
        terms = _binomials(n_rx) * q[..., None] ** k
        return p**n_rx * terms.sum(axis=-1)
    with np.errstate(divide="ignore"):
        logc = np.log(_binomials(n_rx))
        logt = n_rx * np.log(p)[..., None] + logc + k * np.log(q)[..., None]
    m = logt.max(axis=-1, keepdims=True)
    return np.exp(m[..., 0]) * np.exp(logt - m).sum(axis=-1)


def upep_vb(ctx: PairContext, swap_roles: bool = False) -> float:
    """UPEP from the quadratic-form eigenvalues.

    The weights are ``lambda_plus/(lambda_plus - lambda_minus)`` raised to
    N_r and ``-lambda_minus/(lambda_plus - lambda_minus)`` inside the sum.
    ``swap_roles=True`` swaps the two, which yields values above 1/2 and
    is kept only so tests can pin down that discrepancy.
    """
    if ctx.delta == 0:
        return 0.5
    ev = vb_eigenvalues(ctx.delta, ctx.n0)
    gap = ev.lambda_plus - ev.lambda_minus
    p = ev.lambda_plus / gap
    q = -ev.lambda_minus / gap
    if swap_roles:
        p, q = q, p
    return float(_binomial_tail(p, q, ctx.n_rx))


def _mu(x):
    """(1 - sqrt(x/(4+x)))/2 without cancellation at large x."""
    x = np.asarray(x, dtype=float)
    return 2.0 / ((4.0 + x) * (1.0 + np.sqrt(x / (4.0 + x))))


def _upep_eb_x(x, n_rx: int):
    """EB closed form as a function of ``x = rho * kappa_bar`` (vectorised)."""
    mu = _mu(x)
    return _binomial_tail(mu, 1.0 - mu, n_rx)


def upep_eb(ctx: PairContext) -> float:
    return float(_upep_eb_x(ctx.rho * ctx.delta, ctx.n_rx))


def _craig_integrand(theta: float, x: float, n_rx: int) -> float:
    s = 4.0 * math.sin(theta) ** 2
    return (s / (s + x)) ** n_rx


def upep_quadrature(ctx: PairContext, epsabs: float = 1e-12) -> float:
    x = ctx.rho * ctx.delta
    if x == 0:
        return 0.5
    val, _ = integrate.quad(
        _craig_integrand, 0.0, math.pi / 2, args=(x, ctx.n_rx), epsabs=epsabs, epsrel=1e-12, limit=200
    )
    return val / math.pi


def _double_factorial_ratio(n_rx: int) -> float:
    """(2N_r - 1)!! / (2N_r)!!, accumulated as a product of (2j-1)/(2j)."""
    r = 1.0
    for j in range(1, n_rx + 1):
        r *= (2 * j - 1) / (2 * j)
    return r


def _upep_asy_x(x, n_rx: int):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 0.5 * (4.0 / x) ** n_rx * _double_factorial_ratio(n_rx)


def upep_asymptotic(ctx: PairContext) -> float:
    if ctx.delta <= 0:
        raise ValueError("asymptotic UPEP needs delta > 0")
    return float(_upep_asy_x(ctx.rho * ctx.delta, ctx.n_rx))


@dataclass(frozen=True, eq=False)
class PairTable:
    """All ordered codeword pairs ``x != x_hat`` of a configuration.

    ``weight`` carries the probability of the transmitted codeword;
    ``bits_per_use`` is the mean number of bits per channel use.
    """

    kappa: np.ndarray
    hamming: np.ndarray
    weight: np.ndarray
    same_column: np.ndarray
    bits_per_use: float


def pair_table(n_columns: int, rows_per_column: int, constellations) -> PairTable:
    cand = CandidateSet(n_columns, constellations)
    K = len(cand)
    i, j = np.nonzero(~np.eye(K, dtype=bool))
    s, sh = cand.points[i], cand.points[j]
    same = cand.col[i] == cand.col[j]
    kappa = np.where(same, np.abs(s - sh) ** 2, np.abs(s) ** 2 + np.abs(sh) ** 2) * rows_per_column
    ham = word_errors(
        cand.col[i], cand.labels[i], cand.symbol_bits[i], cand.col[j], cand.labels[j], cand.symbol_bits[j]
    )
    orders = np.array([c.order for c in cand.constellations])
    prob = 1.0 / (n_columns * orders[cand.col])
    bits = cand.spatial_bits + float(np.mean([c.bits_per_symbol for c in cand.constellations]))
    return PairTable(kappa=kappa, hamming=ham, weight=prob[i], same_column=same, bits_per_use=bits)


def _resolve_constellations(cfg: SystemConfig, constellations):
    if constellations is None:
        constellations = make_constellation(cfg.mod_order, cfg.mod_kind)
    return per_column(constellations, cfg.n_columns)


def abep_union_bound(cfg: SystemConfig, constellations=None, rho=None, method: str = "eb"):
    """Union upper bound on the average bit error probability.

    Sums UPEP times Hamming distance over all ordered codeword pairs, weighted
    by the codeword probability and divided by the bits per channel use. For a
    single M-ary alphabet this is the familiar division by ``M N log2(MN)``.
    ``method`` picks the pairwise expression: ``"eb"``, ``"vb"``, ``"asy"``
    or ``"quad"``. ``rho`` may be a scalar or an array.
    """
    cons = _resolve_constellations(cfg, constellations)
    if rho is None:
        raise ValueError("rho is required")
    if cfg.bits_per_use == 0 and all(c.order == 1 for c in cons):
        return np.zeros_like(np.asarray(rho, dtype=float)) if np.ndim(rho) else 0.0
    table = pair_table(cfg.n_columns, cfg.rows_per_column, cons)
    rhos = np.atleast_1d(np.asarray(rho, dtype=float))
    coef = table.weight * table.hamming / table.bits_per_use
    keep = coef > 0
    kap, coef = table.kappa[keep], coef[keep]
    out = np.empty(len(rhos))
    for r_i, r in enumerate(rhos):
        if method == "eb":
            p = _upep_eb_x(r * kap, cfg.n_rx)
        elif method == "asy":
            p = _upep_asy_x(r * kap, cfg.n_rx)
        elif method in ("vb", "quad"):
            cache = {}
            p = np.empty(len(kap))
            for k, d in enumerate(kap):
                if d not in cache:
                    ctx = PairContext.at_n0(d, 1.0 / r, cfg.n_rx)
                    cache[d] = upep_vb(ctx) if method == "vb" else upep_quadrature(ctx)
                p[k] = cache[d]
        else:
            raise ValueError(f"unknown method {method!r}")
        out[r_i] = float(np.sum(coef * p))
    return out if np.ndim(rho) else float(out[0])


def abep_curves(cfg: SystemConfig, constellations=None, snr_grid_db: Iterable[float] | None = None) -> dict:
    grid = np.array(cfg.snr_grid_db if snr_grid_db is None else list(snr_grid_db), dtype=float)
    rho = 10.0 ** (grid / 10.0)
    return {
        "snr_db": grid,
        "abep_vb": abep_union_bound(cfg, constellations, rho, method="vb"),
        "abep_eb": abep_union_bound(cfg, constellations, rho, method="eb"),
        "abep_asy": abep_union_bound(cfg, constellations, rho, method="asy"),
    }


def diversity_gain(cfg: SystemConfig) -> int:
    return int(cfg.n_rx)


def estimate_diversity_slope(curve: Sequence[tuple[float, float]]) -> float:
    """Negated least-squares slope of log10(ABEP) against log10(rho)."""
    pts = [(s, p) for s, p in curve if p > 0 and math.isfinite(p) and math.isfinite(s)]
    if len(pts) < 2:
        raise ValueError("need at least two positive, finite points to fit a slope")
    x = np.array([s / 10.0 for s, _ in pts])
    y = np.log10(np.array([p for _, p in pts]))
    if np.ptp(x) == 0:
        raise ValueError("points must span more than one SNR value")
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope) + 0.0
