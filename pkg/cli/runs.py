"""Batch runs behind the command-line subcommands.

Every run writes tidy CSV files headed by the effective configuration as
`# key=value` lines and a JSON summary whose "config" object repeats it.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from api.routes.tools.brokerage.functions import (
    apply_map,
    correlated_map_for_log,
    dynamic_random_map,
    export_map,
    fixed_random_map,
    load_profile,
    realized_profile,
)
from api.routes.tools.decomposition.functions import (
    agent_diagnostics,
    approximation_error,
    conditional_decompose,
    decompose,
    diagonal_curves,
    pair_scatter,
    pair_statistics,
    splitting_ratio_mean,
)
from api.routes.tools.event_log.functions import (
    activity_share,
    agent_summaries,
    export,
    filter_inactive,
    gini,
    ingest,
    top_agents,
)
from api.routes.tools.scenario.functions import run_scenario, summarize_scenario
from api.routes.tools.simulators.functions.imitation import simulate_imitation
from api.routes.tools.simulators.functions.network import build_preferential_attachment
from api.routes.tools.simulators.functions.public_info import simulate_public_info
from api.routes.tools.simulators.functions.splitting import simulate_splitting
from api.routes.tools.stats.functions.conditional import conditional_probabilities
from api.routes.tools.stats.functions.measures import random_mapping_prediction
from api.routes.tools.stats.functions.shuffle import export_shuffle_result, shuffle_test
from cli.config import describe_validation_error
from core.config import settings
from core.errors import ParameterError
from core.outputs import write_frame, write_json
from models.events import EventLog
from models.run import RunConfig
from models.simulation import ImitationParams, PublicInfoParams, SplittingModelParams

logger = logging.getLogger(__name__)

ACTIVITY_TOP = 5


def _load(config: RunConfig) -> EventLog:
    log = ingest(config.input)
    if config.min_events:
        log = filter_inactive(log, config.min_events)
    return log


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ParameterError(f"cannot create output directory {out}: {e}")
    return out


def run_ingest_check(config: RunConfig) -> dict:
    log = _load(config)
    summaries = agent_summaries(log)
    report = {
        "config": config.metadata(),
        "N": log.N,
        "M": log.M,
        "has_price_flags": log.has_price_flags,
        "gini": gini(log),
        f"activity_share_top{ACTIVITY_TOP}": activity_share(log, min(ACTIVITY_TOP, log.M)),
        "agents": [s.model_dump() for s in summaries],
    }
    if config.out is not None:
        write_json(report, config.out)
    return report


def run_decompose(config: RunConfig) -> list[Path]:
    log = _load(config)
    out = _out_dir(config)
    metadata = {**config.metadata(), "N": log.N, "M": log.M}
    tau_max = config.tau_max

    result = decompose(log, tau_max, workers=config.workers)
    frame = result.to_frame()
    frame["approximation_error"] = approximation_error(result)
    written = [out / "decomposition.csv", out / "splitting_ratio.csv", out / "diagonal.csv"]
    write_frame(frame, written[0], metadata)
    write_frame(frame[["tau", "S"]], written[1], metadata)

    top = top_agents(log, min(config.top_k, log.M))
    write_frame(diagonal_curves(log, tau_max, top, config.workers), written[2], metadata)

    if log.M * log.M <= settings.PAIR_MEMORY_CAP:
        write_frame(pair_scatter(pair_statistics(log, 1, workers=config.workers)), out / "scatter.csv", metadata)
        written.append(out / "scatter.csv")
    else:
        logger.warning("M=%d: pair matrix above the memory cap, scatter.csv not written", log.M)

    if config.conditional:
        parts = []
        for condition in ("price_change", "no_price_change"):
            conditional = conditional_decompose(log, tau_max, condition, workers=config.workers)
            part = conditional.to_frame()
            part["conditioning_count"] = conditional.conditioning_counts
            parts.append(part)
        write_frame(pd.concat(parts, ignore_index=True), out / "conditional_decomposition.csv", metadata)
        written.append(out / "conditional_decomposition.csv")

    summary = {
        "config": metadata,
        "N": log.N,
        "M": log.M,
        "gini": gini(log),
        f"activity_share_top{ACTIVITY_TOP}": activity_share(log, min(ACTIVITY_TOP, log.M)),
        "S_bar": splitting_ratio_mean(result, 1, min(tau_max, settings.S_BAR_TAU_MAX)),
        "approximation_error_1": float(approximation_error(result)[0]),
        "diagnostics": agent_diagnostics(log, 1) if log.M >= 3 else {},
        "files": [p.name for p in written],
    }
    write_json(summary, out / "summary.json")
    written.append(out / "summary.json")
    logger.info("decomposition of %d events written to %s", log.N, out)
    return written


def _zipf_weights(M: int, exponent: float) -> list[float]:
    w = np.arange(1, M + 1, dtype=np.float64) ** -exponent
    return (w / w.sum()).tolist()


def simulate_from_config(config: RunConfig) -> EventLog:
    if config.model == "splitting":
        params = SplittingModelParams(
            M=config.m or 1000,
            beta=config.beta,
            v_min=config.v_min,
            pool_size=config.pool_size,
            N=config.n,
            seed=config.seed,
        )
        return simulate_splitting(params)
    if config.model == "public-info":
        M = config.m or 50
        P = _zipf_weights(M, config.zipf_investors) if config.zipf_investors else None
        params = PublicInfoParams(M=M, P=P, run_tail=config.run_tail, n_min=config.n_min, N=config.n, seed=config.seed)
        return simulate_public_info(params)

    M = config.m or 10_000
    network_seed = config.seed if config.network_seed is None else config.network_seed
    network = build_preferential_attachment(M, network_seed)
    log = simulate_imitation(network, ImitationParams(M=M, p=config.p, N=config.n, seed=config.seed))
    return log.relabel(log.agents, log.labels, network_seed=str(network_seed))


def _with_run_config(log: EventLog, config: RunConfig) -> EventLog:
    """Echo the effective run configuration next to the model's own header keys."""
    return log.relabel(log.agents, log.labels, **{f"run.{k}": v for k, v in config.metadata().items()})


def run_simulate(config: RunConfig) -> Path:
    log = simulate_from_config(config)
    out = Path(config.out)
    export(_with_run_config(log, config), out)
    logger.info("%s log with %d events written to %s", config.model, log.N, out)
    return out


def run_map(config: RunConfig) -> Path:
    log = ingest(config.input)
    profile = load_profile(config.profile)
    if config.kind == "fixed":
        brokerage = fixed_random_map(log.frequencies(), profile, config.seed)
    elif config.kind == "dynamic":
        brokerage = dynamic_random_map(profile, config.seed)
    else:
        brokerage = correlated_map_for_log(log, profile, config.phi, config.seed, config.network_seed)

    brokers = apply_map(log, brokerage, workers=config.workers)
    out = Path(config.out)
    export(_with_run_config(brokers, config), out)
    if config.map_out is not None:
        export_map(brokerage, config.map_out, log.labels if brokerage.is_fixed else None)
    _, var_realized = realized_profile(brokers)
    logger.info(
        "%s map: %d investors onto %d brokers, realised Var[P']=%.3g (predicted split %.3f)",
        brokerage.kind, log.M, profile.M_prime, var_realized,
        random_mapping_prediction(profile.M_prime, var_realized).split_fraction,
    )
    return out


def run_nulltest(config: RunConfig) -> Path:
    log = _load(config)
    result = shuffle_test(
        log,
        config.tau_max,
        R=config.replicates,
        alpha=config.alpha,
        seed=config.seed,
        scheme=config.scheme,
        workers=config.workers,
    )
    out = _out_dir(config)
    export_shuffle_result(result, out, config.metadata())
    return out


def run_condprob(config: RunConfig) -> Path:
    log = _load(config)
    probabilities = conditional_probabilities(log, config.tau_max, config.workers)
    out = _out_dir(config)
    metadata = config.metadata()
    frame = probabilities.to_frame()
    frame["count_nochange"] = probabilities.counts_nochange
    frame["count_change"] = probabilities.counts_change
    write_frame(frame, out / "condprob.csv", metadata)
    band = slice(0, min(config.tau_max, settings.S_BAR_TAU_MAX))
    write_json(
        {
            "config": metadata,
            "mean_P_same": float(np.nanmean(probabilities.P_same[band])),
            **{
                f"mean_P_{key}": float(np.nanmean(values[band]))
                for key, values in probabilities.by_broker.items()
            },
        },
        out / "condprob.json",
    )
    return out


def run_scenario_command(config: RunConfig) -> Path:
    try:
        scenario = config.scenario()
    except ValidationError as e:
        raise ParameterError(f"invalid scenario: {describe_validation_error(e)}")
    table = run_scenario(scenario)
    out = _out_dir(config)
    metadata = config.metadata()
    write_frame(table, out / "scenario.csv", metadata)
    summary = summarize_scenario(table)
    write_frame(summary, out / "scenario_summary.csv", metadata)
    write_json({"config": metadata, "points": summary.to_dict(orient="records")}, out / "scenario.json")
    return out
