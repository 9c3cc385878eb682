import logging

import numpy as np

from api.routes.tools.simulators.functions.sampling import draw_pareto
from api.routes.tools.simulators.functions.splitting import investor_labels
from models.events import EventLog
from models.simulation import PublicInfoParams

logger = logging.getLogger(__name__)


def _run_lengths(rng: np.random.Generator, run_tail: float, n_min: int, N: int) -> np.ndarray:
    """Heavy-tailed run lengths covering exactly N events; the last run is cut."""
    batches, total = [], 0
    while total < N:
        batch = draw_pareto(rng, run_tail, n_min, 4096)
        batches.append(batch)
        total += int(np.minimum(batch, N).sum())
    lengths = np.concatenate(batches)
    ends = np.cumsum(np.minimum(lengths, N))
    n_runs = int(np.searchsorted(ends, N)) + 1
    lengths = np.minimum(lengths[:n_runs], N)
    lengths[-1] = N - (ends[n_runs - 2] if n_runs > 1 else 0)
    return lengths


def simulate_public_info(params: PublicInfoParams) -> EventLog:
    """Persistence by reaction to common information.

    Signs come in same-sign runs whose lengths are discrete Pareto (tail
    `run_tail`, minimum `n_min`) with fair-coin run signs; every order goes to an
    investor drawn independently from P. Investors do not split, so all
    persistence is cross-investor and the splitting share is sum_i (P^i)^2.
    """
    rng = np.random.default_rng(params.seed)
    N = params.N
    lengths = _run_lengths(rng, params.run_tail, params.n_min, N)
    run_signs = np.where(rng.random(lengths.shape[0]) < 0.5, 1, -1).astype(np.int8)
    signs = np.repeat(run_signs, lengths)
    agents = rng.choice(params.M, size=N, p=params.frequencies())

    logger.info("public-information model: %d events in %d runs", N, lengths.shape[0])
    return EventLog(
        signs=signs,
        agents=agents,
        price_changed=np.zeros(N, dtype=bool),
        labels=investor_labels(params.M),
        has_price_flags=False,
        metadata={
            "model": "public_info",
            "persistence_route": "heavy_tailed_run_length",
            "M": str(params.M),
            "run_tail": str(params.run_tail),
            "n_min": str(params.n_min),
            "N": str(N),
            "seed": str(params.seed),
        },
    )
