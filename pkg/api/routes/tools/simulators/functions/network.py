import logging

import networkx as nx
import numpy as np

from api.routes.tools.stats.functions.fitting import fit_power_law
from core.errors import ParameterError
from models.simulation import SocialNetwork

logger = logging.getLogger(__name__)


def build_preferential_attachment(M: int, seed: int = 0) -> SocialNetwork:
    """Scale-free tree: node k >= 2 attaches to one earlier node chosen with
    probability proportional to its degree; node 1 attaches to node 0."""
    if M < 2:
        raise ParameterError(f"a social network needs at least 2 investors, got {M}")
    graph = nx.barabasi_albert_graph(M, 1, seed=seed)
    if graph.number_of_edges() != M - 1 or not nx.is_connected(graph):
        raise ParameterError("preferential attachment did not produce a spanning tree")

    adjacency = [sorted(graph.neighbors(k)) for k in range(M)]
    # every node k > 0 has exactly one neighbour with a smaller index: the one it attached to
    parent = [-1] + [adjacency[k][0] for k in range(1, M)]
    return SocialNetwork(M=M, adjacency=adjacency, parent=parent)


def degree_ccdf(network: SocialNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Distinct degrees l and P(L >= l)."""
    degrees = network.degrees()
    values, counts = np.unique(degrees, return_counts=True)
    ccdf = counts[::-1].cumsum()[::-1] / degrees.shape[0]
    return values, ccdf


def degree_exponent(network: SocialNetwork, l_min: int = 2) -> float:
    """eta in p(l) ~ l^-eta, from the slope of the degree CCDF (which falls as
    l^-(eta-1)) over degrees >= l_min."""
    values, ccdf = degree_ccdf(network)
    fit = fit_power_law(ccdf, (l_min, int(values.max())), taus=values)
    return 1.0 + fit.gamma


def calibrate_degree_exponent(M: int, seeds: list[int], l_min: int = 2) -> tuple[float, float]:
    """Mean eta and its standard error over independently seeded networks."""
    if len(seeds) < 2:
        raise ParameterError("calibration needs at least two seeds")
    etas = np.array([degree_exponent(build_preferential_attachment(M, s), l_min) for s in seeds])
    mean, se = float(etas.mean()), float(etas.std(ddof=1) / np.sqrt(len(etas)))
    logger.info("degree exponent over %d networks of %d nodes: %.3f +- %.3f", len(seeds), M, mean, se)
    return mean, se
