import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Literal, TypeVar

import numpy as np
import pandas as pd

from api.routes.tools.stats.functions.measures import spearman
from core.config import settings
from core.errors import CapacityError, EmptyLogError, LagRangeError
from models.decomposition import DecompositionResult, PairStatistics
from models.events import EventLog

logger = logging.getLogger(__name__)

T = TypeVar("T")


def check_lags(log: EventLog, tau_max: int) -> None:
    if log.N == 0:
        raise EmptyLogError("cannot analyse an empty log")
    if tau_max < 1 or tau_max >= log.N:
        raise LagRangeError(f"tau_max must satisfy 1 <= tau_max < N={log.N}, got {tau_max}")


def map_lags(fn: Callable[[int], T], tau_max: int, workers: int | None = None) -> list[T]:
    """fn(tau) for tau = 1..tau_max, in lag order.

    Every per-lag computation is independent and integer-exact, so the worker
    count changes wall time only.
    """
    workers = workers or settings.WORKERS
    taus = range(1, tau_max + 1)
    if workers <= 1:
        return [fn(tau) for tau in taus]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, taus))


def _lag_products(signs: np.ndarray, tau: int) -> np.ndarray:
    # +-1 times +-1 stays inside int8
    return signs[:-tau] * signs[tau:]


def autocorrelation(log: EventLog, tau_max: int, workers: int | None = None) -> np.ndarray:
    """C(tau) = (1/N) sum_t eps_t eps_{t+tau} - ((1/N) sum_t eps_t)^2, tau = 1..tau_max.

    The lagged sum has N - tau terms but is divided by N, which biases C(tau)
    by O(tau/N).
    """
    check_lags(log, tau_max)
    signs = log.signs
    mean = int(signs.sum(dtype=np.int64)) / log.N
    sums = map_lags(lambda tau: int(_lag_products(signs, tau).sum(dtype=np.int64)), tau_max, workers)
    return np.asarray(sums, dtype=np.float64) / log.N - mean * mean


def _check_capacity(log: EventLog, tau_max: int, memory_cap: int | None) -> None:
    memory_cap = memory_cap or settings.PAIR_MEMORY_CAP
    entries = log.M * log.M * tau_max
    if entries > memory_cap:
        raise CapacityError(
            f"pair statistics need {entries:,} entries per matrix (M={log.M}, tau_max={tau_max}), "
            f"above the cap of {memory_cap:,}; apply filter_inactive or lower tau_max"
        )


def pair_statistics(
    log: EventLog, tau_max: int, memory_cap: int | None = None, workers: int | None = None
) -> PairStatistics:
    check_lags(log, tau_max)
    _check_capacity(log, tau_max, memory_cap)
    M, N = log.M, log.N
    agents, signs = log.agents, log.signs

    def one_lag(tau: int) -> tuple[np.ndarray, np.ndarray]:
        key = agents[:-tau] * M + agents[tau:]
        counts = np.bincount(key, minlength=M * M)
        sums = np.bincount(key, weights=_lag_products(signs, tau), minlength=M * M)
        return counts.reshape(M, M), np.rint(sums).astype(np.int64).reshape(M, M)

    per_lag = map_lags(one_lag, tau_max, workers)
    N_ij = np.stack([c for c, _ in per_lag]).astype(np.int64)
    S_ij = np.stack([s for _, s in per_lag])

    P_i = log.frequencies()
    mu_i = log.mean_signs()
    P_ij = N_ij / N
    with np.errstate(invalid="ignore", divide="ignore"):
        C_ij = np.where(N_ij > 0, S_ij / N_ij - np.outer(mu_i, mu_i), np.nan)
    P_tilde_ij = P_ij - np.outer(P_i, P_i)

    return PairStatistics(
        tau_max=tau_max,
        N=N,
        N_ij=N_ij,
        sign_sums_ij=S_ij,
        P_ij=P_ij,
        C_ij=C_ij,
        P_tilde_ij=P_tilde_ij,
        P_i=P_i,
        mu_i=mu_i,
    )


def _splitting_ratio(C: np.ndarray, C_split: np.ndarray, ratio_floor: float | None) -> np.ndarray:
    ratio_floor = settings.RATIO_FLOOR if ratio_floor is None else ratio_floor
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(np.abs(C) > ratio_floor, C_split / C, np.nan)


def decompose(
    log: EventLog,
    tau_max: int,
    ratio_floor: float | None = None,
    memory_cap: int | None = None,
    workers: int | None = None,
) -> DecompositionResult:
    """Split C(tau) into same-agent (splitting) and cross-agent (herding) parts.

    Uses the dense M x M matrices while they fit under the memory cap; above it
    only the diagonal and the marginals are kept and the off-diagonal sums follow
    from C = C_split + C_herd.
    """
    C = autocorrelation(log, tau_max, workers)
    cap = memory_cap or settings.PAIR_MEMORY_CAP
    if log.M * log.M * tau_max <= cap:
        parts = _full_terms(pair_statistics(log, tau_max, cap, workers))
    else:
        logger.info("M=%d above the pair-matrix cap, using the diagonal-only path", log.M)
        parts = _compact_terms(log, tau_max, C, workers)

    term1_split, term2_split, term1_herd, term2_herd = parts
    C_split = term1_split + term2_split
    C_herd = term1_herd + term2_herd
    return DecompositionResult(
        taus=np.arange(1, tau_max + 1),
        C=C,
        C_split=C_split,
        C_herd=C_herd,
        S=_splitting_ratio(C, C_split, ratio_floor),
        term1_split=term1_split,
        term2_split=term2_split,
        term1_herd=term1_herd,
        term2_herd=term2_herd,
    )


def _sorted_sum(values: np.ndarray) -> np.ndarray:
    """Row sums (over all but the first axis) taken in sorted order, so relabelling
    agents cannot change a single bit of the result."""
    flat = values.reshape(values.shape[0], -1)
    return np.sort(flat, axis=1).sum(axis=1)


def _full_terms(stats: PairStatistics) -> tuple[np.ndarray, ...]:
    term1 = np.where(stats.N_ij > 0, stats.P_ij * np.nan_to_num(stats.C_ij), 0.0)
    term2 = stats.P_tilde_ij * np.outer(stats.mu_i, stats.mu_i)
    diag = np.eye(stats.M, dtype=bool)
    return (
        _sorted_sum(np.where(diag, term1, 0.0)),
        _sorted_sum(np.where(diag, term2, 0.0)),
        _sorted_sum(np.where(diag, 0.0, term1)),
        _sorted_sum(np.where(diag, 0.0, term2)),
    )


def _diagonal_lag(log: EventLog, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """N^{ii}(tau) and the same-agent sign-product sums for every agent."""
    agents = log.agents
    same = agents[:-tau] == agents[tau:]
    owners = agents[:-tau][same]
    products = _lag_products(log.signs, tau)[same]
    counts = np.bincount(owners, minlength=log.M).astype(np.int64)
    sums = np.rint(np.bincount(owners, weights=products, minlength=log.M)).astype(np.int64)
    return counts, sums


def _compact_terms(log: EventLog, tau_max: int, C: np.ndarray, workers: int | None) -> tuple[np.ndarray, ...]:
    N, M = log.N, log.M
    P_i = log.frequencies()
    mu_i = log.mean_signs()
    mean = int(log.signs.sum(dtype=np.int64)) / N
    agents = log.agents

    def one_lag(tau: int) -> tuple[float, float, float]:
        N_ii, S_ii = _diagonal_lag(log, tau)
        with np.errstate(invalid="ignore", divide="ignore"):
            t1 = np.where(N_ii > 0, (N_ii / N) * (S_ii / np.maximum(N_ii, 1) - mu_i * mu_i), 0.0)
        t2 = (N_ii / N - P_i * P_i) * mu_i * mu_i
        # sum_ij P^{ij} mu^i mu^j without the matrix
        row = np.bincount(agents[:-tau], weights=mu_i[agents[tau:]], minlength=M)
        term2_total = float(np.sort(row * mu_i).sum()) / N - mean * mean
        return float(np.sort(t1).sum()), float(np.sort(t2).sum()), term2_total

    per_lag = np.asarray(map_lags(one_lag, tau_max, workers), dtype=np.float64)
    term1_split, term2_split, term2_total = per_lag[:, 0], per_lag[:, 1], per_lag[:, 2]
    term2_herd = term2_total - term2_split
    C_herd = C - (term1_split + term2_split)
    return term1_split, term2_split, C_herd - term2_herd, term2_herd


def herding_component(
    signs: np.ndarray, agents: np.ndarray, M: int, tau_max: int, workers: int | None = None
) -> np.ndarray:
    """C_herd(tau) straight from the raw columns.

    C_herd = (1/N) sum over cross-agent pairs of eps_t eps_{t+tau}
             - [m^2 - sum_i (P^i mu^i)^2],  m the mean sign,
    which is the off-diagonal part of the decomposition collapsed algebraically.
    """
    N = signs.shape[0]
    mean = int(signs.sum(dtype=np.int64)) / N
    flow = np.bincount(agents, weights=signs, minlength=M) / N  # P^i mu^i
    offset = mean * mean - float(np.sort(flow * flow).sum())

    def one_lag(tau: int) -> float:
        products = _lag_products(signs, tau)
        same = agents[:-tau] == agents[tau:]
        cross = int(products.sum(dtype=np.int64)) - int(products[same].sum(dtype=np.int64))
        return cross / N - offset

    return np.asarray(map_lags(one_lag, tau_max, workers), dtype=np.float64)


def approximation_error(result: DecompositionResult) -> np.ndarray:
    """|C - sum_ij P^{ij} C^{ij}|, the size of the activity-deviation term."""
    return np.abs(result.term2_split + result.term2_herd)


def conditional_decompose(
    log: EventLog,
    tau_max: int,
    condition: Literal["price_change", "no_price_change"],
    ratio_floor: float | None = None,
    workers: int | None = None,
) -> DecompositionResult:
    """Decompose E[(eps_t - mu)(eps_{t+tau} - mu) | event at t] into same-agent
    and cross-agent pairs.

    mu is the global mean sign; each lag is normalised by its own count of
    conditioning events. Centering absorbs the activity-deviation term, so both
    term2 arrays are zero.
    """
    log.require_price_flags()
    check_lags(log, tau_max)
    flags = log.price_changed if condition == "price_change" else ~log.price_changed
    signs, agents = log.signs, log.agents
    mu = int(signs.sum(dtype=np.int64)) / log.N

    def centred(products: np.ndarray, firsts: np.ndarray, seconds: np.ndarray) -> tuple[int, int, int]:
        return (
            int(products.sum(dtype=np.int64)),
            int(firsts.sum(dtype=np.int64)) + int(seconds.sum(dtype=np.int64)),
            int(products.shape[0]),
        )

    def one_lag(tau: int) -> tuple[float, float, float, int]:
        selected = flags[:-tau]
        firsts = signs[:-tau][selected]
        seconds = signs[tau:][selected]
        same = agents[:-tau][selected] == agents[tau:][selected]
        products = firsts * seconds
        A, B, n = centred(products, firsts, seconds)
        if n == 0:
            return np.nan, np.nan, np.nan, 0
        A_s, B_s, n_s = centred(products[same], firsts[same], seconds[same])
        total = (A - mu * B + n * mu * mu) / n
        split = (A_s - mu * B_s + n_s * mu * mu) / n
        herd = ((A - A_s) - mu * (B - B_s) + (n - n_s) * mu * mu) / n
        return total, split, herd, n

    per_lag = map_lags(one_lag, tau_max, workers)
    C = np.array([r[0] for r in per_lag], dtype=np.float64)
    C_split = np.array([r[1] for r in per_lag], dtype=np.float64)
    C_herd = np.array([r[2] for r in per_lag], dtype=np.float64)
    zeros = np.zeros(tau_max)
    return DecompositionResult(
        taus=np.arange(1, tau_max + 1),
        C=C,
        C_split=C_split,
        C_herd=C_herd,
        S=_splitting_ratio(C, C_split, ratio_floor),
        term1_split=C_split,
        term2_split=zeros,
        term1_herd=C_herd,
        term2_herd=zeros.copy(),
        condition=condition,
        conditioning_counts=np.array([r[3] for r in per_lag], dtype=np.int64),
    )


def splitting_ratio_mean(result: DecompositionResult, tau_lo: int = 1, tau_hi: int | None = None) -> float:
    """S-bar: mean of the defined S(tau) over tau_lo <= tau <= tau_hi."""
    tau_hi = tau_hi or settings.S_BAR_TAU_MAX
    window = (result.taus >= tau_lo) & (result.taus <= tau_hi)
    values = result.S[window]
    values = values[~np.isnan(values)]
    return float(values.mean()) if values.size else float("nan")


def diagonal_curves(log: EventLog, tau_max: int, agents: np.ndarray, workers: int | None = None) -> pd.DataFrame:
    """C^{ii}(tau) and P~^{ii}(tau) for the chosen agents, without the M x M matrices."""
    check_lags(log, tau_max)
    P_i = log.frequencies()
    mu_i = log.mean_signs()
    agents = np.asarray(agents, dtype=np.int64)
    rows = []
    diagonals = map_lags(lambda tau: _diagonal_lag(log, tau), tau_max, workers)
    for tau, (N_ii, S_ii) in zip(range(1, tau_max + 1), diagonals):
        for i in agents:
            C_ii = S_ii[i] / N_ii[i] - mu_i[i] ** 2 if N_ii[i] > 0 else np.nan
            rows.append(
                {
                    "agent": int(i),
                    "label": log.labels[i],
                    "tau": tau,
                    "C_ii": C_ii,
                    "P_tilde_ii": N_ii[i] / log.N - P_i[i] ** 2,
                }
            )
    return pd.DataFrame(rows, columns=["agent", "label", "tau", "C_ii", "P_tilde_ii"])


def pair_scatter(stats: PairStatistics, tau: int = 1) -> pd.DataFrame:
    """P^{ij}(tau) against the independence value P^i P^j for every pair."""
    M = stats.M
    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    return pd.DataFrame(
        {
            "i": i.ravel(),
            "j": j.ravel(),
            "P_ij": stats.P_ij[tau - 1].ravel(),
            "Pi_Pj": np.outer(stats.P_i, stats.P_i).ravel(),
        }
    )


def agent_diagnostics(log: EventLog, tau: int = 1) -> dict[str, float]:
    """Rank correlation of activity P^i with C^{ii}(tau) and with P~^{ii}(tau)."""
    curves = diagonal_curves(log, tau, np.arange(log.M))
    at_lag = curves[curves["tau"] == tau].set_index("agent").reindex(range(log.M))
    P_i = log.frequencies()
    defined = ~at_lag["C_ii"].isna().to_numpy()
    return {
        "tau": tau,
        "spearman_P_C_ii": spearman(P_i[defined], at_lag["C_ii"].to_numpy()[defined])
        if defined.sum() >= 3
        else float("nan"),
        "spearman_P_P_tilde_ii": spearman(P_i, at_lag["P_tilde_ii"].to_numpy())
        if log.M >= 3
        else float("nan"),
    }
