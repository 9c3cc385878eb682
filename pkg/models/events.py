from typing import Iterator, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    field_validator,
    model_validator,
)
from typing_extensions import Self

from core.errors import MissingDataError


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class OrderEvent(BaseModel):
    """One market order: its position in the event clock, sign, agent and price flag."""

    model_config = ConfigDict(frozen=True)

    t: NonNegativeInt
    sign: Literal[1, -1]
    agent: NonNegativeInt
    price_changed: bool = False


class AgentSummary(BaseModel):
    agent: NonNegativeInt
    label: str
    N_i: NonNegativeInt
    P_i: float
    mu_i: float


class EventLog(BaseModel):
    """Time-ordered market orders with a dense agent registry.

    Events are stored column-wise; event t is the t-th entry of every array.
    The arrays are read-only so a log can be shared between workers.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    signs: np.ndarray
    agents: np.ndarray
    price_changed: np.ndarray
    labels: tuple[str, ...]
    has_price_flags: bool = True
    metadata: dict[str, str] = Field(default_factory=dict)

    @field_validator("signs", mode="before")
    @classmethod
    def _signs_array(cls, v) -> np.ndarray:
        return _frozen_array(v, np.int8)

    @field_validator("agents", mode="before")
    @classmethod
    def _agents_array(cls, v) -> np.ndarray:
        return _frozen_array(v, np.int64)

    @field_validator("price_changed", mode="before")
    @classmethod
    def _flags_array(cls, v) -> np.ndarray:
        return _frozen_array(v, bool)

    @model_validator(mode="after")
    def _check_columns(self) -> Self:
        n = self.signs.shape[0]
        if self.signs.ndim != 1 or self.agents.shape != (n,) or self.price_changed.shape != (n,):
            raise ValueError("signs, agents and price_changed must be 1-d arrays of equal length")
        if n and not np.all(np.abs(self.signs) == 1):
            raise ValueError("signs must be +1 or -1")
        if n and (self.agents.min() < 0 or self.agents.max() >= len(self.labels)):
            raise ValueError("every event's agent must appear in the registry")
        return self

    @classmethod
    def from_events(
        cls,
        events: list[OrderEvent],
        labels: list[str] | None = None,
        has_price_flags: bool = True,
        metadata: dict[str, str] | None = None,
    ) -> "EventLog":
        n_agents = max((e.agent for e in events), default=-1) + 1
        return cls(
            signs=[e.sign for e in events],
            agents=[e.agent for e in events],
            price_changed=[e.price_changed for e in events],
            labels=tuple(labels) if labels is not None else tuple(str(i) for i in range(n_agents)),
            has_price_flags=has_price_flags,
            metadata=metadata or {},
        )

    @property
    def N(self) -> int:
        return int(self.signs.shape[0])

    @property
    def M(self) -> int:
        return len(self.labels)

    def event(self, t: int) -> OrderEvent:
        return OrderEvent(
            t=t,
            sign=int(self.signs[t]),
            agent=int(self.agents[t]),
            price_changed=bool(self.price_changed[t]),
        )

    def events(self) -> Iterator[OrderEvent]:
        for t in range(self.N):
            yield self.event(t)

    def agent_counts(self) -> np.ndarray:
        """N^i for every registered agent."""
        return np.bincount(self.agents, minlength=self.M).astype(np.int64)

    def agent_sign_sums(self) -> np.ndarray:
        """Sum of signs per agent, exact integers."""
        sums = np.bincount(self.agents, weights=self.signs, minlength=self.M)
        return np.rint(sums).astype(np.int64)

    def frequencies(self) -> np.ndarray:
        return self.agent_counts() / self.N

    def mean_signs(self) -> np.ndarray:
        counts = self.agent_counts()
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(counts > 0, self.agent_sign_sums() / np.maximum(counts, 1), 0.0)

    def relabel(self, agents: np.ndarray, labels: tuple[str, ...], **metadata: str) -> "EventLog":
        """Same signs and flags, new agent column (used by brokerage maps)."""
        return EventLog(
            signs=self.signs,
            agents=agents,
            price_changed=self.price_changed,
            labels=labels,
            has_price_flags=self.has_price_flags,
            metadata={**self.metadata, **metadata},
        )

    def require_price_flags(self) -> None:
        if not self.has_price_flags:
            raise MissingDataError(
                "log carries no price_changed column; price-conditional analysis refused"
            )
