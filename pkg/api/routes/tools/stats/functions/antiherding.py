import logging

import numpy as np

from api.routes.tools.simulators.functions.sampling import IntegerStream, MetaorderSource, UniformStream
from models.events import EventLog
from models.stats import AntiHerdingParams

logger = logging.getLogger(__name__)


def generate_antiherding(params: AntiHerdingParams, seed: int = 0) -> EventLog:
    """Order flow with a known anti-herding component.

    Splitters 0..S-1 share a pool of `pool_size` metaorders. Every metaorder is
    drawn as price-moving with probability `flag_prob` and all of its orders
    carry that flag. Contrarians S..S+C-1 look at the latest splitter order: if it
    lies within `window` events and moved the price they take the opposite side
    with probability `response`; if it did not move the price they copy it with
    probability `follow`. Otherwise they trade a fair coin.
    """
    rng = np.random.default_rng(seed)
    S, K = params.n_splitters, params.pool_size
    source = MetaorderSource(rng, S, params.beta, params.v_min)
    uniforms = UniformStream(rng)
    slots = IntegerStream(rng, K)
    contrarians = IntegerStream(rng, params.n_contrarians)

    def fresh() -> list:
        owner, sign, size = source.next()
        return [owner, sign, size, uniforms.next() < params.flag_prob]

    pool = [fresh() for _ in range(K)]
    N = params.N
    signs = np.empty(N, dtype=np.int8)
    agents = np.empty(N, dtype=np.int64)
    flags = np.empty(N, dtype=bool)

    last_t, last_sign, last_flag = -1, 0, False
    for t in range(N):
        if uniforms.next() < params.contrarian_share:
            agent = S + contrarians.next()
            coin = uniforms.next()
            if last_t >= 0 and t - last_t <= params.window:
                if last_flag:
                    sign = -last_sign if coin < params.response else last_sign
                else:
                    sign = last_sign if coin < params.follow else -last_sign
            else:
                sign = 1 if coin < 0.5 else -1
            flag = True
        else:
            k = slots.next()
            owner, sign, remaining, flag = pool[k]
            agent = owner
            if remaining <= 1:
                pool[k] = fresh()
            else:
                pool[k][2] = remaining - 1
            last_t, last_sign, last_flag = t, sign, flag
        signs[t] = sign
        agents[t] = agent
        flags[t] = flag

    labels = tuple(f"S{i:02d}" for i in range(S)) + tuple(f"C{i:02d}" for i in range(params.n_contrarians))
    logger.debug("anti-herding fixture: %d events, %d price-moving", N, int(flags.sum()))
    return EventLog(
        signs=signs,
        agents=agents,
        price_changed=flags,
        labels=labels,
        has_price_flags=True,
        metadata={
            "model": "antiherding",
            "seed": str(seed),
            **{key: str(value) for key, value in params.model_dump().items()},
        },
    )
