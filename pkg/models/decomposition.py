from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, PositiveInt


class PairStatistics(BaseModel):
    """Per-lag pair matrices; axis 0 is the lag index k = tau - 1.

    C_ij is NaN wherever N_ij is zero.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tau_max: PositiveInt
    N: PositiveInt
    N_ij: np.ndarray
    sign_sums_ij: np.ndarray
    P_ij: np.ndarray
    C_ij: np.ndarray
    P_tilde_ij: np.ndarray
    P_i: np.ndarray
    mu_i: np.ndarray

    @property
    def taus(self) -> np.ndarray:
        return np.arange(1, self.tau_max + 1)

    @property
    def M(self) -> int:
        return int(self.P_i.shape[0])


class DecompositionResult(BaseModel):
    """C = C_split + C_herd per lag, each split into the weighted-correlation term
    (term1) and the activity-deviation term (term2)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    taus: np.ndarray
    C: np.ndarray
    C_split: np.ndarray
    C_herd: np.ndarray
    S: np.ndarray
    term1_split: np.ndarray
    term2_split: np.ndarray
    term1_herd: np.ndarray
    term2_herd: np.ndarray
    condition: Literal["price_change", "no_price_change"] | None = None
    conditioning_counts: np.ndarray | None = None

    @property
    def tau_max(self) -> int:
        return int(self.taus[-1])

    @property
    def term2_total(self) -> np.ndarray:
        return self.term2_split + self.term2_herd

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "tau": self.taus,
                "C": self.C,
                "C_split": self.C_split,
                "C_herd": self.C_herd,
                "S": self.S,
                "term2_total": self.term2_total,
            }
        )
        if self.condition is not None:
            frame["condition"] = self.condition
        return frame
