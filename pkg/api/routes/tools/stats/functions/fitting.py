import logging

import numpy as np
from scipy import stats

from core.config import settings
from core.errors import InsufficientDataError, ParameterError
from models.stats import PowerLawFit

logger = logging.getLogger(__name__)


def _log_bin_means(x: np.ndarray, y: np.ndarray, bins_per_decade: int) -> tuple[np.ndarray, np.ndarray]:
    """Average log10 x and log10 y inside logarithmically spaced bins of x."""
    lx, ly = np.log10(x), np.log10(y)
    bin_ids = np.floor(lx * bins_per_decade + 1e-9).astype(np.int64)
    _, inverse, counts = np.unique(bin_ids, return_inverse=True, return_counts=True)
    mean_x = np.bincount(inverse, weights=lx) / counts
    mean_y = np.bincount(inverse, weights=ly) / counts
    return mean_x, mean_y


def fit_power_law(
    curve,
    tau_range: tuple[int, int],
    taus=None,
    bins_per_decade: int | None = None,
) -> PowerLawFit:
    """Fit curve(tau) ~ A tau^(-gamma) by least squares on log-binned log-log points.

    `taus` defaults to 1..len(curve). Points that are not strictly positive are
    dropped before the fit.
    """
    bins_per_decade = bins_per_decade or settings.FIT_BINS_PER_DECADE
    values = np.asarray(curve, dtype=np.float64)
    taus = np.arange(1, values.size + 1) if taus is None else np.asarray(taus, dtype=np.float64)
    if taus.shape != values.shape:
        raise ParameterError("taus and curve must have the same length")

    lo, hi = tau_range
    if lo <= 0 or hi < lo:
        raise ParameterError(f"fit range must satisfy 0 < lo <= hi, got ({lo}, {hi})")

    window = (taus >= lo) & (taus <= hi)
    positive = window & np.isfinite(values) & (values > 0)
    dropped = int(window.sum() - positive.sum())
    if dropped:
        logger.warning("dropped %d non-positive or undefined points from the power-law fit", dropped)

    n_points = int(positive.sum())
    if n_points < settings.FIT_MIN_POINTS:
        raise InsufficientDataError(
            f"power-law fit needs at least {settings.FIT_MIN_POINTS} positive points in "
            f"[{lo}, {hi}], found {n_points}"
        )

    x, y = _log_bin_means(taus[positive], values[positive], bins_per_decade)
    if x.size < 2:
        raise InsufficientDataError("all fit points fall into a single logarithmic bin")
    regression = stats.linregress(x, y)
    r_squared = float(regression.rvalue**2) if np.isfinite(regression.rvalue) else 0.0
    return PowerLawFit(
        gamma=float(-regression.slope),
        stderr=float(regression.stderr),
        r_squared=r_squared,
        n_points=n_points,
        n_bins=int(x.size),
        poor_fit=r_squared < settings.FIT_MIN_R2,
    )
