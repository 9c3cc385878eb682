import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal

import numpy as np

from api.routes.tools.decomposition.functions import check_lags, herding_component
from core.config import settings
from core.errors import ParameterError, ResolutionError
from core.outputs import write_frame, write_json
from models.events import EventLog
from models.stats import ShuffleTestResult

logger = logging.getLogger(__name__)

MIN_REPLICATES = 100


def _check_replicates(R: int, alpha: float) -> None:
    if R < MIN_REPLICATES:
        raise ParameterError(f"the shuffle test needs R >= {MIN_REPLICATES} replicates, got {R}")
    if R > settings.SHUFFLE_MAX_REPLICATES:
        raise ParameterError(f"R={R} exceeds the maximum of {settings.SHUFFLE_MAX_REPLICATES}")
    if R > settings.SHUFFLE_WARN_REPLICATES:
        logger.warning("R=%d replicates will take a while", R)
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if alpha < 1.0 / (R + 1):
        raise ResolutionError(
            f"the smallest attainable p-value with R={R} is 1/(R+1)={1.0 / (R + 1):.3g}, "
            f"so alpha={alpha} can never reject; raise R"
        )


def _shuffled_columns(
    signs: np.ndarray,
    agents: np.ndarray,
    seed: int,
    replicate: int,
    scheme: Literal["independent", "joint"],
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([seed, replicate])
    if scheme == "joint":
        order = rng.permutation(signs.shape[0])
        return signs[order], agents[order]
    return rng.permutation(signs), rng.permutation(agents)


def shuffle_test(
    log: EventLog,
    tau_max: int,
    R: int | None = None,
    alpha: float | None = None,
    seed: int = 0,
    scheme: Literal["independent", "joint"] = "independent",
    workers: int | None = None,
) -> ShuffleTestResult:
    """One-sided test for anti-herding: is C_herd(tau) smaller than under shuffling?

    The independent scheme permutes signs and agent labels separately, breaking
    both the sign persistence and the agent sequence while keeping every count.
    The joint scheme permutes whole events. Replicate r is seeded with (seed, r),
    so results do not depend on the worker count.
    """
    R = R or settings.SHUFFLE_REPLICATES
    alpha = settings.ALPHA if alpha is None else alpha
    workers = workers or settings.WORKERS
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    if scheme not in ("independent", "joint"):
        raise ParameterError(f"unknown shuffle scheme {scheme!r}")
    _check_replicates(R, alpha)
    check_lags(log, tau_max)

    signs, agents, M = log.signs, log.agents, log.M
    observed = herding_component(signs, agents, M, tau_max, workers=1)

    def replicate(r: int) -> np.ndarray:
        s, a = _shuffled_columns(signs, agents, seed, r, scheme)
        return herding_component(s, a, M, tau_max, workers=1) <= observed

    at_or_below = np.zeros(tau_max, dtype=np.int64)
    if workers <= 1:
        for r in range(R):
            at_or_below += replicate(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for hits in pool.map(replicate, range(R)):
                at_or_below += hits

    p_values = (1.0 + at_or_below) / (R + 1.0)
    result = ShuffleTestResult(
        R=R,
        alpha=alpha,
        seed=seed,
        scheme=scheme,
        taus=np.arange(1, tau_max + 1),
        observed=observed,
        p_values=p_values,
        reject_at=p_values < alpha,
    )
    logger.info("shuffle test rejected at %.1f%% of lags", 100 * result.rejection_fraction)
    return result


def export_shuffle_result(result: ShuffleTestResult, out_dir: str | Path, metadata: dict | None = None) -> None:
    out_dir = Path(out_dir)
    metadata = {**(metadata or {}), **result.summary()}
    frame = result.to_frame()
    frame.insert(1, "C_herd", result.observed)
    write_frame(frame, out_dir / "nulltest.csv", metadata)
    write_json({"config": metadata, **result.summary()}, out_dir / "nulltest.json")
