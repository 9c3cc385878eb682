import numpy as np
from scipy import stats

from core.errors import ParameterError
from models.stats import RandomMappingPrediction


def spearman(x, y) -> float:
    """Spearman rank correlation, ties given their average rank.

    NaN when either input is constant, since a rank correlation is undefined there.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ParameterError(f"spearman needs equal-length inputs, got {x.shape} and {y.shape}")
    if x.size < 3:
        raise ParameterError(f"spearman needs at least 3 points, got {x.size}")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    if rx.std() == 0 or ry.std() == 0:
        return float("nan")
    rho = np.corrcoef(rx, ry)[0, 1]
    return float(np.clip(rho, -1.0, 1.0))


def random_mapping_prediction(M_prime: int, var_P_prime: float) -> RandomMappingPrediction:
    """Expected splitting and herding fractions of broker-level C(tau) when investor
    order flow is purely herding and investors are spread at random over M' brokers
    with activity variance Var[P'].

        split = 1/M' + M' Var[P'],  herd = (M' - 1)/M' - M' Var[P']
    """
    if M_prime < 1:
        raise ParameterError(f"M' must be at least 1, got {M_prime}")
    upper = (1.0 / M_prime) * (1.0 - 1.0 / M_prime)
    slack = 1e-12
    if var_P_prime < -slack or var_P_prime > upper + slack:
        raise ParameterError(f"Var[P'] must lie in [0, {upper:.6g}] for M'={M_prime}, got {var_P_prime}")
    var_P_prime = min(max(var_P_prime, 0.0), upper)
    split = 1.0 / M_prime + M_prime * var_P_prime
    return RandomMappingPrediction(split_fraction=split, herd_fraction=1.0 - split)


def ks_uniformity(p_values) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance of p-values from U(0, 1) and its p-value."""
    p_values = np.asarray(p_values, dtype=np.float64)
    p_values = p_values[~np.isnan(p_values)]
    if p_values.size == 0:
        raise ParameterError("no p-values to test")
    result = stats.kstest(p_values, "uniform")
    return float(result.statistic), float(result.pvalue)
