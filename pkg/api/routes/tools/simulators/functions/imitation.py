import logging

import numpy as np

from api.routes.tools.simulators.functions.sampling import IntegerStream, UniformStream
from api.routes.tools.simulators.functions.splitting import investor_labels
from core.errors import ParameterError
from models.events import EventLog
from models.simulation import ImitationParams, SocialNetwork

logger = logging.getLogger(__name__)


def simulate_imitation(network: SocialNetwork, params: ImitationParams) -> EventLog:
    """Herding by imitation on a social network.

    States start as independent fair coins. Each round a uniformly chosen
    investor i trades its state; then each neighbour j, in adjacency order,
    either copies i (probability p: trades s^i and adopts it) or trades its own
    state. Every order advances the clock by one; the run stops at exactly N
    orders, possibly in the middle of a round.
    """
    if network.M != params.M:
        raise ParameterError(f"network has {network.M} nodes but M={params.M}")
    rng = np.random.default_rng(params.seed)
    M, N, p = params.M, params.N, params.p
    states = np.where(rng.random(M) < 0.5, 1, -1).tolist()
    n_buy = sum(1 for s in states if s == 1)
    nodes = IntegerStream(rng, M)
    coins = UniformStream(rng)
    adjacency = network.adjacency

    signs = np.empty(N, dtype=np.int8)
    agents = np.empty(N, dtype=np.int64)
    absorbed_at = 0 if n_buy in (0, M) else -1
    t = 0
    while t < N:
        i = nodes.next()
        s_i = states[i]
        signs[t], agents[t] = s_i, i
        t += 1
        for j in adjacency[i]:
            if t >= N:
                break
            if coins.next() < p:
                if states[j] != s_i:
                    states[j] = s_i
                    n_buy += s_i
                    if absorbed_at < 0 and n_buy in (0, M):
                        absorbed_at = t
                signs[t] = s_i
            else:
                signs[t] = states[j]
            agents[t] = j
            t += 1

    metadata = {
        "model": "imitation",
        "persistence_route": "imitation",
        "M": str(M),
        "p": str(p),
        "N": str(N),
        "seed": str(params.seed),
        "neighbor_order": "adjacency",
        "noise_injection": "unimplemented",
        "absorbed": "true" if absorbed_at >= 0 else "false",
    }
    if absorbed_at >= 0:
        metadata["absorbed_at"] = str(absorbed_at)
        logger.warning("imitation dynamics reached a consensus state at t=%d; later orders share one sign", absorbed_at)
    return EventLog(
        signs=signs,
        agents=agents,
        price_changed=np.zeros(N, dtype=bool),
        labels=investor_labels(M),
        has_price_flags=False,
        metadata=metadata,
    )
