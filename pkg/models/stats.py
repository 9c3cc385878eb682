from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, PositiveInt


class ShuffleTestResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    R: PositiveInt
    alpha: float
    seed: int
    scheme: Literal["independent", "joint"]
    taus: np.ndarray
    observed: np.ndarray
    p_values: np.ndarray
    reject_at: np.ndarray

    @property
    def rejection_fraction(self) -> float:
        return float(self.reject_at.mean())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "tau": self.taus,
                "p_value": self.p_values,
                "reject": self.reject_at.astype(int),
            }
        )

    def summary(self) -> dict:
        return {
            "R": self.R,
            "alpha": self.alpha,
            "seed": self.seed,
            "scheme": self.scheme,
            "rejection_fraction": self.rejection_fraction,
        }


class ConditionalProbabilities(BaseModel):
    """Same-sign probabilities P(eps_t = eps_{t+tau} | event at t); NaN where a
    conditioning class is empty at that lag."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    taus: np.ndarray
    P_same: np.ndarray
    P_same_given_nochange: np.ndarray
    P_same_given_change: np.ndarray
    counts_nochange: np.ndarray
    counts_change: np.ndarray
    # keys: same_nochange, diff_nochange, same_change, diff_change
    by_broker: dict[str, np.ndarray]
    by_broker_counts: dict[str, np.ndarray]

    @property
    def excess_nochange(self) -> np.ndarray:
        return self.P_same_given_nochange - 0.5

    @property
    def excess_change(self) -> np.ndarray:
        return self.P_same_given_change - 0.5

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "tau": self.taus,
                "P_same": self.P_same,
                "P_same_nochange": self.P_same_given_nochange,
                "P_same_change": self.P_same_given_change,
                "excess_nochange": self.excess_nochange,
                "excess_change": self.excess_change,
            }
        )
        for key, values in self.by_broker.items():
            frame[f"P_{key}"] = values
        return frame


class PowerLawFit(BaseModel):
    gamma: float
    stderr: float
    r_squared: float
    n_points: int
    n_bins: int
    poor_fit: bool


class RandomMappingPrediction(BaseModel):
    split_fraction: float
    herd_fraction: float


class AntiHerdingParams(BaseModel):
    """Synthetic fixture: splitters execute persistent metaorders, each of which either
    moves the price on every order or never does; contrarians trade against the
    latest price-moving splitter order and with probability `follow` copy a
    non-moving one. Contrarian orders always move the price."""

    n_splitters: PositiveInt = 10
    n_contrarians: PositiveInt = 10
    pool_size: PositiveInt = 3
    beta: float = Field(default=1.5, gt=1.0)
    v_min: PositiveInt = 2
    contrarian_share: float = Field(default=0.3, ge=0.0, le=1.0)
    flag_prob: float = Field(default=0.5, ge=0.0, le=1.0)
    response: float = Field(default=0.8, ge=0.0, le=1.0)
    follow: float = Field(default=0.5, ge=0.0, le=1.0)
    window: PositiveInt = 10
    N: PositiveInt = 50_000
