import numpy as np
import pytest

from models.events import EventLog


def make_log(signs, agents, flags=None, labels=None, metadata=None) -> EventLog:
    agents = np.asarray(agents, dtype=np.int64)
    if labels is None:
        labels = tuple(f"a{i}" for i in range(int(agents.max()) + 1))
    return EventLog(
        signs=np.asarray(signs, dtype=np.int8),
        agents=agents,
        price_changed=np.zeros(agents.shape[0], dtype=bool) if flags is None else np.asarray(flags, dtype=bool),
        labels=tuple(labels),
        has_price_flags=flags is not None,
        metadata=metadata or {},
    )


def random_log(seed: int, N: int, M: int, with_flags: bool = False, persistence: float = 0.0) -> EventLog:
    """IID agents; signs repeat the previous sign with probability `persistence`."""
    rng = np.random.default_rng(seed)
    signs = np.where(rng.random(N) < 0.5, 1, -1)
    repeat = rng.random(N) < persistence
    for t in range(1, N):
        if repeat[t]:
            signs[t] = signs[t - 1]
    agents = rng.integers(0, M, N)
    flags = rng.random(N) < 0.5 if with_flags else None
    return make_log(signs, agents, flags, labels=tuple(f"a{i}" for i in range(M)))


def naive_pairs(log: EventLog, tau_max: int):
    """N^{ij}(tau) and sign-product sums by explicit loops."""
    M = log.M
    N_ij = np.zeros((tau_max, M, M), dtype=np.int64)
    S_ij = np.zeros((tau_max, M, M), dtype=np.int64)
    signs = log.signs.tolist()
    agents = log.agents.tolist()
    for tau in range(1, tau_max + 1):
        for t in range(log.N - tau):
            i, j = agents[t], agents[t + tau]
            N_ij[tau - 1, i, j] += 1
            S_ij[tau - 1, i, j] += signs[t] * signs[t + tau]
    return N_ij, S_ij


def naive_decomposition(log: EventLog, tau_max: int) -> dict[str, np.ndarray]:
    """C, C_split, C_herd and the activity-deviation term summed cell by cell."""
    N, M = log.N, log.M
    N_ij, S_ij = naive_pairs(log, tau_max)
    signs = log.signs.tolist()
    agents = log.agents.tolist()
    counts = [0] * M
    sums = [0] * M
    for s, a in zip(signs, agents):
        counts[a] += 1
        sums[a] += s
    P = [c / N for c in counts]
    mu = [sums[i] / counts[i] if counts[i] else 0.0 for i in range(M)]
    mean = sum(signs) / N

    out = {key: np.zeros(tau_max) for key in ("C", "C_split", "C_herd", "term2")}
    for k in range(tau_max):
        tau = k + 1
        out["C"][k] = sum(signs[t] * signs[t + tau] for t in range(N - tau)) / N - mean * mean
        for i in range(M):
            for j in range(M):
                P_ij = N_ij[k, i, j] / N
                C_ij = S_ij[k, i, j] / N_ij[k, i, j] - mu[i] * mu[j] if N_ij[k, i, j] else 0.0
                second = (P_ij - P[i] * P[j]) * mu[i] * mu[j]
                value = P_ij * C_ij + second
                out["C_split" if i == j else "C_herd"][k] += value
                out["term2"][k] += second
    return out


@pytest.fixture
def small_log() -> EventLog:
    return random_log(seed=7, N=500, M=3, with_flags=True, persistence=0.6)


@pytest.fixture
def iid_log() -> EventLog:
    return random_log(seed=11, N=20_000, M=10, with_flags=True)


def write_profile(path, frequencies, labels=None) -> None:
    labels = labels or [f"B{b:03d}" for b in range(len(frequencies))]
    lines = ["broker,frequency"] + [f"{b},{f!r}" for b, f in zip(labels, frequencies)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
