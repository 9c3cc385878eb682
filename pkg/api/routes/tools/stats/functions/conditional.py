import logging

import numpy as np

from api.routes.tools.decomposition.functions import check_lags, map_lags
from core.errors import MissingDataError
from models.events import EventLog
from models.stats import ConditionalProbabilities

logger = logging.getLogger(__name__)

CELLS = ("same_nochange", "diff_nochange", "same_change", "diff_change")


def _ratio(hits: np.ndarray, counts: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, hits / np.maximum(counts, 1), np.nan)


def conditional_probabilities(log: EventLog, tau_max: int, workers: int | None = None) -> ConditionalProbabilities:
    """P(eps_t = eps_{t+tau}) overall, given whether the order at t moved the price,
    and split further by whether t and t+tau belong to the same agent.

    Cells with no qualifying pair are NaN.
    """
    log.require_price_flags()
    check_lags(log, tau_max)
    flags = log.price_changed
    if flags.all() or not flags.any():
        raise MissingDataError("both price-moving and non-moving orders are needed")
    signs, agents = log.signs, log.agents

    def one_lag(tau: int) -> np.ndarray:
        same_sign = signs[:-tau] == signs[tau:]
        same_agent = agents[:-tau] == agents[tau:]
        change = flags[:-tau]
        row = [int(same_sign.sum()), same_sign.shape[0]]
        for agent_mask in (same_agent, ~same_agent):
            for cond in (~change, change):
                cell = agent_mask & cond
                row += [int((same_sign & cell).sum()), int(cell.sum())]
        for cond in (~change, change):
            row += [int((same_sign & cond).sum()), int(cond.sum())]
        return np.asarray(row, dtype=np.int64)

    table = np.stack(map_lags(one_lag, tau_max, workers))
    hits, counts = table[:, 0::2], table[:, 1::2]
    # column order: all, same/nochange, same/change, diff/nochange, diff/change, nochange, change
    by_cell = {
        "same_nochange": 1,
        "same_change": 2,
        "diff_nochange": 3,
        "diff_change": 4,
    }
    result = ConditionalProbabilities(
        taus=np.arange(1, tau_max + 1),
        P_same=_ratio(hits[:, 0], counts[:, 0]),
        P_same_given_nochange=_ratio(hits[:, 5], counts[:, 5]),
        P_same_given_change=_ratio(hits[:, 6], counts[:, 6]),
        counts_nochange=counts[:, 5],
        counts_change=counts[:, 6],
        by_broker={key: _ratio(hits[:, by_cell[key]], counts[:, by_cell[key]]) for key in CELLS},
        by_broker_counts={key: counts[:, by_cell[key]] for key in CELLS},
    )
    empty = int((counts[:, 5] == 0).sum() + (counts[:, 6] == 0).sum())
    if empty:
        logger.warning("%d (lag, condition) cells have no conditioning events", empty)
    return result
