import logging

import numpy as np

from api.routes.tools.simulators.functions.sampling import IntegerStream, MetaorderSource
from models.events import EventLog
from models.simulation import SplittingModelParams

logger = logging.getLogger(__name__)


def investor_labels(M: int) -> tuple[str, ...]:
    return tuple(f"I{i:05d}" for i in range(M))


def simulate_splitting(params: SplittingModelParams) -> EventLog:
    """Persistence by order splitting.

    K metaorders are live at any time, each owned by a uniformly drawn investor,
    with a fair-coin sign and a discrete Pareto size (tail exponent beta). Each
    event picks a live metaorder uniformly, executes one unit of it, and a
    finished metaorder is replaced at once. C(tau) then decays as tau^-(beta-1).
    """
    rng = np.random.default_rng(params.seed)
    source = MetaorderSource(rng, params.M, params.beta, params.v_min)
    K, N = params.pool_size, params.N
    pool = [list(source.next()) for _ in range(K)]
    slots = IntegerStream(rng, K)

    signs = np.empty(N, dtype=np.int8)
    agents = np.empty(N, dtype=np.int64)
    completed = 0
    for t in range(N):
        k = slots.next()
        owner, sign, remaining = pool[k]
        signs[t] = sign
        agents[t] = owner
        if remaining <= 1:
            pool[k] = list(source.next())
            completed += 1
        else:
            pool[k][2] = remaining - 1

    logger.info("splitting model: %d events, %d completed metaorders", N, completed)
    return EventLog(
        signs=signs,
        agents=agents,
        price_changed=np.zeros(N, dtype=bool),
        labels=investor_labels(params.M),
        has_price_flags=False,
        metadata={
            "model": "splitting",
            "persistence_route": "order_splitting",
            **{key: str(value) for key, value in params.model_dump().items()},
        },
    )
