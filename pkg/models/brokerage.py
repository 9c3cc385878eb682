from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from typing_extensions import Self


class BrokerProfile(BaseModel):
    labels: list[str]
    P_prime: list[float]

    @model_validator(mode="after")
    def _check_frequencies(self) -> Self:
        if len(self.labels) != len(self.P_prime):
            raise ValueError("one frequency per broker label")
        if not self.P_prime:
            raise ValueError("profile needs at least one broker")
        if min(self.P_prime) <= 0:
            raise ValueError("broker frequencies must be positive")
        if abs(sum(self.P_prime) - 1.0) > 1e-12:
            raise ValueError(f"broker frequencies must sum to 1, got {sum(self.P_prime)!r}")
        return self

    @classmethod
    def from_weights(cls, weights, labels: list[str] | None = None) -> "BrokerProfile":
        w = np.asarray(weights, dtype=np.float64)
        P = w / w.sum()
        # fold the rounding residue into the largest entry so the sum is 1 to 1e-12
        P[np.argmax(P)] += 1.0 - P.sum()
        labels = labels or [f"B{b:03d}" for b in range(len(P))]
        return cls(labels=labels, P_prime=P.tolist())

    @property
    def M_prime(self) -> int:
        return len(self.P_prime)

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.P_prime, dtype=np.float64)

    @property
    def variance(self) -> float:
        """Var[P'] = (1/M') sum (P'^i)^2 - 1/M'^2."""
        P = self.frequencies()
        return float((P * P).sum() / self.M_prime - 1.0 / self.M_prime**2)


class BrokerageMap(BaseModel):
    kind: Literal["fixed_random", "dynamic_random", "correlated"]
    profile: BrokerProfile
    assignment: Optional[list[int]] = None
    phi: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_kind(self) -> Self:
        if (self.phi is not None) != (self.kind == "correlated"):
            raise ValueError("phi is required for, and only for, correlated maps")
        if self.kind == "dynamic_random":
            if self.assignment is not None:
                raise ValueError("dynamic maps sample from the profile, not an assignment")
        else:
            if self.assignment is None:
                raise ValueError(f"{self.kind} map needs a per-investor assignment")
            if self.assignment and (
                min(self.assignment) < 0 or max(self.assignment) >= self.profile.M_prime
            ):
                raise ValueError("assignment references an unknown broker")
        return self

    @property
    def is_fixed(self) -> bool:
        return self.kind != "dynamic_random"
