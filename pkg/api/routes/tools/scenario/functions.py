import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from api.routes.tools.brokerage.functions import (
    apply_map,
    correlated_broker_assignment,
    dynamic_random_map,
    fixed_random_map,
    frequency_variance,
    realized_profile,
    zipf_profile,
)
from api.routes.tools.decomposition.functions import decompose, splitting_ratio_mean
from api.routes.tools.simulators.functions.imitation import simulate_imitation
from api.routes.tools.simulators.functions.network import build_preferential_attachment
from api.routes.tools.simulators.functions.public_info import simulate_public_info
from api.routes.tools.simulators.functions.splitting import simulate_splitting
from api.routes.tools.stats.functions.measures import random_mapping_prediction
from core.config import settings
from models.events import EventLog
from models.run import ScenarioConfig
from models.simulation import ImitationParams, PublicInfoParams, SplittingModelParams, SocialNetwork

logger = logging.getLogger(__name__)

# independent sub-streams of one point seed
SIMULATION_STREAM, MAP_STREAM, NETWORK_STREAM = 0, 1, 2


def child_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def simulate_investors(
    config: ScenarioConfig, model: str, seed: int, network: SocialNetwork | None = None
) -> tuple[EventLog, np.ndarray]:
    """Investor-level log and the intended trading frequencies used to build a fixed map."""
    M, N = config.n_investors, config.n_events
    uniform = np.full(M, 1.0 / M)
    sim_seed = child_seed(seed, SIMULATION_STREAM)
    if model == "splitting":
        params = SplittingModelParams(
            M=M, beta=config.beta, v_min=config.v_min, pool_size=config.pool_size, N=N, seed=sim_seed
        )
        return simulate_splitting(params), uniform
    if model == "public-info":
        params = PublicInfoParams(M=M, run_tail=config.run_tail, N=N, seed=sim_seed)
        return simulate_public_info(params), params.frequencies()
    network = network or build_preferential_attachment(M, child_seed(seed, NETWORK_STREAM))
    return simulate_imitation(network, ImitationParams(M=M, p=config.p, N=N, seed=sim_seed)), uniform


def run_scenario_point(config: ScenarioConfig, value: float, seed: int) -> dict:
    """Simulate investors, route them through brokers, decompose at broker level."""
    map_seed = child_seed(seed, MAP_STREAM)
    phi = np.nan
    if config.name == "imitation+FRB":
        phi = value
        profile = zipf_profile(config.n_brokers, config.zipf_exponent)
        network = build_preferential_attachment(config.n_investors, child_seed(seed, NETWORK_STREAM))
        brokerage = correlated_broker_assignment(network, profile, phi, map_seed)
        investors, _ = simulate_investors(config, "imitation", seed, network)
    else:
        profile = zipf_profile(config.n_brokers, value)
        model = {"public-info+FRB": "public-info", "splitting+FRB": "splitting"}.get(
            config.name, config.investor_model
        )
        investors, freqs = simulate_investors(config, model, seed)
        if config.name == "any+DRB":
            brokerage = dynamic_random_map(profile, map_seed)
        else:
            brokerage = fixed_random_map(freqs, profile, map_seed)

    brokers = apply_map(investors, brokerage, workers=1)
    result = decompose(brokers, config.tau_max, workers=1)
    _, var_realized = realized_profile(brokers)
    prediction = random_mapping_prediction(profile.M_prime, var_realized)
    with np.errstate(invalid="ignore", divide="ignore"):
        herd_over_split = result.C_herd / result.C_split
    return {
        "scenario": config.name,
        "value": value,
        "seed": seed,
        "phi": phi,
        "M_prime": profile.M_prime,
        "var_P_prime_target": frequency_variance(profile.frequencies()),
        "var_P_prime": var_realized,
        "S_bar": splitting_ratio_mean(result, 1, min(config.tau_max, settings.S_BAR_TAU_MAX)),
        "predicted_split": prediction.split_fraction,
        "C_1": result.C[0],
        "C_split_1": result.C_split[0],
        "C_herd_1": result.C_herd[0],
        "min_herd_over_split": float(np.nanmin(herd_over_split)) if np.isfinite(herd_over_split).any() else np.nan,
    }


def run_scenario(config: ScenarioConfig) -> pd.DataFrame:
    """One row per (sweep value, seed); rows come back in sweep-then-seed order
    whatever the worker count."""
    points = [(value, seed) for value in config.sweep for seed in config.seeds]
    logger.info("scenario %s: %d points on %d workers", config.name, len(points), config.workers)

    def one(point: tuple[float, int]) -> dict:
        return run_scenario_point(config, *point)

    if config.workers <= 1:
        rows = [one(point) for point in points]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(one, points))
    return pd.DataFrame(rows)


def summarize_scenario(table: pd.DataFrame) -> pd.DataFrame:
    """Per sweep value: mean S-bar with its standard error next to the closed-form prediction."""
    grouped = table.groupby("value", sort=False)
    summary = grouped.agg(
        phi=("phi", "first"),
        n_seeds=("seed", "count"),
        var_P_prime=("var_P_prime", "mean"),
        S_bar=("S_bar", "mean"),
        S_bar_std=("S_bar", "std"),
        predicted_split=("predicted_split", "mean"),
    ).reset_index()
    summary["S_bar_se"] = summary["S_bar_std"] / np.sqrt(summary["n_seeds"])
    return summary.drop(columns="S_bar_std")
