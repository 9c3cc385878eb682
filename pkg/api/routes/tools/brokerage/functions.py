import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from api.routes.tools.simulators.functions.network import build_preferential_attachment
from api.routes.tools.simulators.functions.splitting import investor_labels
from core.config import settings
from core.errors import FeasibilityError, MappingError, ParameterError, ParseError
from core.outputs import write_frame
from models.brokerage import BrokerageMap, BrokerProfile
from models.events import EventLog
from models.simulation import SocialNetwork

logger = logging.getLogger(__name__)


def zipf_profile(M_prime: int, exponent: float = 1.0) -> BrokerProfile:
    """P'^b proportional to (b+1)^-exponent."""
    if M_prime < 1:
        raise ParameterError(f"need at least one broker, got {M_prime}")
    if exponent < 0:
        raise ParameterError(f"Zipf exponent must be non-negative, got {exponent}")
    ranks = np.arange(1, M_prime + 1, dtype=np.float64)
    return BrokerProfile.from_weights(ranks**-exponent)


def concentrated_profile() -> BrokerProfile:
    """50 brokers with a Zipf(0.9) activity profile: the top five carry about 45%
    of the orders and 1/M' + M' Var[P'] is close to 0.06."""
    return zipf_profile(50, 0.9)


def load_profile(path: str | Path) -> BrokerProfile:
    """Read a `broker,frequency` CSV; frequencies are renormalised."""
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"broker profile not found: {path}")
    try:
        frame = pd.read_csv(path, comment="#", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"malformed broker profile: {e}")
    missing = {"broker", "frequency"} - set(frame.columns)
    if missing:
        raise ParseError(f"broker profile lacks column(s): {', '.join(sorted(missing))}", line=0)
    weights = pd.to_numeric(frame["frequency"], errors="coerce").to_numpy()
    bad = ~np.isfinite(weights) | (weights <= 0)
    if bad.any():
        raise ParseError("broker frequencies must be positive numbers", line=int(np.argmax(bad)) + 1)
    if abs(weights.sum() - 1.0) > 1e-6:
        logger.warning("broker frequencies sum to %.6g, renormalising", weights.sum())
    return BrokerProfile.from_weights(weights, labels=[str(b) for b in frame["broker"]])


def _investor_frequencies(investor_freqs) -> np.ndarray:
    freqs = np.asarray(investor_freqs, dtype=np.float64)
    if freqs.ndim != 1 or freqs.size == 0:
        raise ParameterError("investor frequencies must be a non-empty vector")
    if (freqs < 0).any() or freqs.sum() <= 0:
        raise ParameterError("investor frequencies must be non-negative with a positive total")
    return freqs / freqs.sum()


def _transfer(assignment: np.ndarray, freqs: np.ndarray, dev: np.ndarray, over: int, under: int) -> bool:
    """Move one investor, or swap a pair, from broker `over` to broker `under`
    if that lowers |dev[over]| + |dev[under]|."""
    before = abs(dev[over]) + abs(dev[under])
    donors = np.flatnonzero(assignment == over)
    if donors.size == 0:
        return False

    shift = freqs[donors]
    after = np.abs(dev[over] - shift) + np.abs(dev[under] + shift)
    best = int(np.argmin(after))
    move_gain = before - after[best]

    swap_gain, swap = 0.0, None
    takers = np.flatnonzero(assignment == under)
    if takers.size:
        net = shift[:, None] - freqs[takers][None, :]
        swapped = np.abs(dev[over] - net) + np.abs(dev[under] + net)
        x, y = np.unravel_index(int(np.argmin(swapped)), swapped.shape)
        swap_gain, swap = before - swapped[x, y], (donors[x], takers[y])

    if max(move_gain, swap_gain) <= 1e-15:
        return False
    if move_gain >= swap_gain:
        investor = donors[best]
        assignment[investor] = under
        dev[over] -= freqs[investor]
        dev[under] += freqs[investor]
    else:
        a, b = swap
        net = freqs[a] - freqs[b]
        assignment[a], assignment[b] = under, over
        dev[over] -= net
        dev[under] += net
    return True


def _rebalance_pass(assignment: np.ndarray, freqs: np.ndarray, dev: np.ndarray, tolerance: float) -> bool:
    """Pair the most over-loaded brokers with the most under-loaded ones and
    transfer load between each pair; True if anything moved."""
    moved = False
    for over in np.argsort(-dev, kind="stable"):
        if dev[over] <= tolerance:
            break
        for under in np.argsort(dev, kind="stable"):
            if dev[under] >= 0:
                break
            if _transfer(assignment, freqs, dev, int(over), int(under)):
                moved = True
                break
    for under in np.argsort(dev, kind="stable"):
        if dev[under] >= -tolerance:
            break
        for over in np.argsort(-dev, kind="stable"):
            if dev[over] <= 0:
                break
            if _transfer(assignment, freqs, dev, int(over), int(under)):
                moved = True
                break
    return moved


def fixed_random_map(
    investor_freqs,
    profile: BrokerProfile,
    seed: int = 0,
    tolerance: float | None = None,
    max_passes: int | None = None,
) -> BrokerageMap:
    """Tie every investor to one broker for good.

    Investors are first drawn onto brokers from P', then moved or swapped
    until each broker's realised load sum_{i -> b} P^i is within
    `tolerance * min(P')` of P'^b.
    """
    freqs = _investor_frequencies(investor_freqs)
    target = profile.frequencies()
    tolerance = (settings.REBALANCE_TOLERANCE if tolerance is None else tolerance) * float(target.min())
    max_passes = max_passes or settings.REBALANCE_MAX_PASSES
    if freqs.max() > target.max() + tolerance:
        raise FeasibilityError(
            f"the most active investor trades {freqs.max():.4g} of all orders, more than the "
            f"largest broker share {target.max():.4g}; no fixed map can match P'"
        )

    rng = np.random.default_rng(seed)
    assignment = rng.choice(profile.M_prime, size=freqs.shape[0], p=target)
    dev = np.bincount(assignment, weights=freqs, minlength=profile.M_prime) - target

    passes = 0
    while np.abs(dev).max() > tolerance:
        if passes >= max_passes:
            raise FeasibilityError(
                f"rebalancing did not reach tolerance {tolerance:.3g} within {max_passes} passes "
                f"(max deviation {np.abs(dev).max():.3g})"
            )
        if not _rebalance_pass(assignment, freqs, dev, tolerance):
            raise FeasibilityError(
                f"no move or swap lowers the broker load deviation {np.abs(dev).max():.3g} "
                f"below tolerance {tolerance:.3g}"
            )
        passes += 1
    logger.info("fixed random map: %d investors on %d brokers after %d passes", freqs.shape[0], profile.M_prime, passes)
    return BrokerageMap(kind="fixed_random", profile=profile, assignment=assignment.tolist(), seed=seed)


def dynamic_random_map(profile: BrokerProfile, seed: int = 0) -> BrokerageMap:
    """Each order independently routed to a broker drawn from P'."""
    return BrokerageMap(kind="dynamic_random", profile=profile, seed=seed)


def correlated_broker_assignment(
    network: SocialNetwork, profile: BrokerProfile, phi: float, seed: int = 0
) -> BrokerageMap:
    """Assign brokers along the network's attachment order: the root draws from
    P'; each later node keeps its parent's broker with probability phi and
    otherwise draws from P'. Also stored on `network.broker_of`."""
    if network.parent is None:
        raise ParameterError("correlated assignment needs the network's attachment order")
    if not 0.0 <= phi <= 1.0:
        raise ParameterError(f"phi must lie in [0, 1], got {phi}")
    rng = np.random.default_rng(seed)
    M = network.M
    fresh = rng.choice(profile.M_prime, size=M, p=profile.frequencies())
    inherit = rng.random(M) < phi
    broker = fresh.copy()
    for k in range(1, M):
        parent = network.parent[k]
        if inherit[k]:
            broker[k] = broker[parent]
    network.broker_of = broker.tolist()
    return BrokerageMap(kind="correlated", profile=profile, assignment=broker.tolist(), phi=phi, seed=seed)


def _dynamic_chunk(profile: BrokerProfile, seed: int, chunk: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([seed, chunk])
    return rng.choice(profile.M_prime, size=size, p=profile.frequencies())


def apply_map(log: EventLog, brokerage: BrokerageMap, workers: int | None = None) -> EventLog:
    """Broker-level log: same signs, times and flags, agents replaced by brokers.

    Dynamic draws come from independently seeded chunks of the event clock, so
    the output does not depend on the worker count.
    """
    workers = workers or settings.WORKERS
    profile = brokerage.profile
    if brokerage.is_fixed:
        assignment = np.asarray(brokerage.assignment, dtype=np.int64)
        if log.N and int(log.agents.max()) >= assignment.shape[0]:
            raise MappingError(
                f"map covers {assignment.shape[0]} investors but the log references investor "
                f"{int(log.agents.max())}"
            )
        brokers = assignment[log.agents]
    else:
        size = settings.DYNAMIC_MAP_CHUNK
        starts = list(range(0, log.N, size))

        def draw(c: int) -> np.ndarray:
            return _dynamic_chunk(profile, brokerage.seed, c, min(size, log.N - starts[c]))

        if workers <= 1 or len(starts) <= 1:
            chunks = [draw(c) for c in range(len(starts))]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(draw, range(len(starts))))
        brokers = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)

    metadata = {"brokerage": brokerage.kind, "brokerage_seed": str(brokerage.seed), "M_prime": str(profile.M_prime)}
    if brokerage.phi is not None:
        metadata["phi"] = str(brokerage.phi)
    return log.relabel(brokers, tuple(profile.labels), **metadata)


def export_map(brokerage: BrokerageMap, path: str | Path, investor_labels: tuple[str, ...] | None = None) -> None:
    """`investor,broker` CSV for fixed maps, `broker,frequency` for dynamic ones."""
    metadata = {"brokerage": brokerage.kind, "seed": brokerage.seed}
    if brokerage.phi is not None:
        metadata["phi"] = brokerage.phi
    labels = brokerage.profile.labels
    if brokerage.is_fixed:
        n = len(brokerage.assignment)
        investors = list(investor_labels) if investor_labels is not None else [str(i) for i in range(n)]
        if len(investors) != n:
            raise ParameterError(f"{len(investors)} investor labels for a map over {n} investors")
        frame = pd.DataFrame({"investor": investors, "broker": [labels[b] for b in brokerage.assignment]})
    else:
        frame = pd.DataFrame({"broker": labels, "frequency": brokerage.profile.P_prime})
    write_frame(frame, path, metadata)


def frequency_variance(frequencies) -> float:
    """Var[P] = (1/M) sum P^2 - 1/M^2 over the registry, empty entries included."""
    P = np.asarray(frequencies, dtype=np.float64)
    M = P.shape[0]
    return float(np.sort(P * P).sum() / M - 1.0 / M**2)


def realized_profile(log: EventLog) -> tuple[np.ndarray, float]:
    """Per-broker share of orders in a broker-level log and its variance."""
    P = log.frequencies()
    return P, frequency_variance(P)


def correlated_map_for_log(
    log: EventLog, profile: BrokerProfile, phi: float, seed: int = 0, network_seed: int | None = None
) -> BrokerageMap:
    """Correlated map for an exported imitation log.

    The social network is rebuilt from the `M` and `network_seed` header keys,
    brokers are assigned along it and investors are matched to nodes by label.
    """
    M = int(log.metadata.get("M", log.M))
    if network_seed is None:
        network_seed = int(log.metadata.get("network_seed", seed))
    network = build_preferential_attachment(M, network_seed)
    by_node = correlated_broker_assignment(network, profile, phi, seed)
    node_of = {label: k for k, label in enumerate(investor_labels(M))}
    unknown = [label for label in log.labels if label not in node_of]
    if unknown:
        raise MappingError(f"investor {unknown[0]!r} is not a node of the {M}-node network")
    return BrokerageMap(
        kind="correlated",
        profile=profile,
        assignment=[by_node.assignment[node_of[label]] for label in log.labels],
        phi=phi,
        seed=seed,
    )
