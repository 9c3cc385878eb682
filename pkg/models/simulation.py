from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, PositiveInt, model_validator
from typing_extensions import Self


class SplittingModelParams(BaseModel):
    """Metaorder splitting: K concurrent Pareto-sized metaorders executed one unit at a time."""

    M: PositiveInt = 1000
    beta: float = Field(default=1.5, gt=1.0)
    v_min: PositiveInt = 1
    pool_size: PositiveInt = 5
    N: PositiveInt = 100_000
    seed: int = Field(default=0, ge=0)


class PublicInfoParams(BaseModel):
    """Public information herding: same-sign runs of heavy-tailed length, each order
    assigned to an investor drawn from P."""

    M: PositiveInt = 50
    P: Optional[list[float]] = None  # uniform when omitted
    run_tail: float = Field(default=1.5, gt=1.0)
    n_min: PositiveInt = 1
    N: PositiveInt = 100_000
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_frequencies(self) -> Self:
        if self.P is None:
            self.P = [1.0 / self.M] * self.M
        if len(self.P) != self.M:
            raise ValueError(f"P has {len(self.P)} entries for M={self.M} investors")
        if min(self.P) <= 0:
            raise ValueError("trading frequencies must be positive")
        if abs(sum(self.P) - 1.0) > 1e-9:
            raise ValueError(f"trading frequencies must sum to 1, got {sum(self.P)}")
        return self

    def frequencies(self) -> np.ndarray:
        P = np.asarray(self.P, dtype=np.float64)
        return P / P.sum()


class ImitationParams(BaseModel):
    M: int = Field(default=10_000, ge=2)
    p: float = Field(default=0.9, ge=0.0, le=1.0)
    N: PositiveInt = 1_000_000
    seed: int = Field(default=0, ge=0)


class SocialNetwork(BaseModel):
    """Undirected tree over M investors.

    `parent[k]` is the node k attached to when it was added (-1 for the root),
    so iterating k = 1..M-1 replays the attachment order.
    """

    M: int = Field(ge=2)
    adjacency: list[list[int]]
    parent: Optional[list[int]] = None
    broker_of: Optional[list[int]] = None

    @model_validator(mode="after")
    def _check_tree(self) -> Self:
        if len(self.adjacency) != self.M:
            raise ValueError("adjacency must list neighbours for every node")
        degrees = [len(n) for n in self.adjacency]
        if min(degrees) < 1:
            raise ValueError("every node needs at least one neighbour")
        if sum(degrees) != 2 * (self.M - 1):
            raise ValueError("a tree over M nodes has exactly M - 1 edges")
        if self.parent is not None and len(self.parent) != self.M:
            raise ValueError("parent must have one entry per node")
        if self.broker_of is not None and len(self.broker_of) != self.M:
            raise ValueError("broker_of must have one entry per node")
        return self

    def degrees(self) -> np.ndarray:
        return np.array([len(n) for n in self.adjacency], dtype=np.int64)
