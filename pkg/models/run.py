from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, field_validator, model_validator
from typing_extensions import Self

from core.config import settings

Command = Literal["ingest-check", "decompose", "simulate", "map", "nulltest", "condprob", "scenario"]
ScenarioName = Literal["public-info+FRB", "imitation+FRB", "any+DRB", "splitting+FRB"]
InvestorModel = Literal["splitting", "public-info", "imitation"]

REQUIRED = {
    "ingest-check": ("input",),
    "decompose": ("input", "out"),
    "simulate": ("model", "out"),
    "map": ("kind", "profile", "input", "out"),
    "nulltest": ("input",),
    "condprob": ("input",),
    "scenario": ("name", "sweep", "out"),
}
# written next to the input as <stem>_<command>/ when --out is omitted
DEFAULT_OUT = ("nulltest", "condprob")


def parse_number_list(text: str) -> list[float]:
    """`0,0.5,1` or `lo:hi:count` (inclusive, evenly spaced)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range sweep must be lo:hi:count, got {text!r}")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("sweep count must be positive")
        if count == 1:
            return [lo]
        step = (hi - lo) / (count - 1)
        return [lo + k * step for k in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


class ScenarioConfig(BaseModel):
    """One null-hypothesis scenario swept over a list of values.

    `sweep` holds Zipf exponents of the broker profile (so the points move along
    Var[P']) except for imitation+FRB, where it holds phi values and the profile
    is fixed by `zipf_exponent`.
    """

    name: ScenarioName
    sweep: list[float] = Field(min_length=1)
    seeds: list[NonNegativeInt] = Field(default_factory=lambda: [0], min_length=1)
    n_investors: PositiveInt = 10_000
    n_brokers: PositiveInt = 50
    n_events: PositiveInt = 100_000
    tau_max: PositiveInt = settings.S_BAR_TAU_MAX
    investor_model: InvestorModel = "public-info"
    zipf_exponent: float = Field(default=0.9, ge=0.0)
    p: float = Field(default=0.9, ge=0.0, le=1.0)
    beta: float = Field(default=1.5, gt=1.0)
    v_min: PositiveInt = 1
    pool_size: PositiveInt = 5
    run_tail: float = Field(default=1.5, gt=1.0)
    workers: PositiveInt = settings.WORKERS

    @model_validator(mode="after")
    def _check_sweep(self) -> Self:
        if self.name == "imitation+FRB":
            if any(not 0.0 <= v <= 1.0 for v in self.sweep):
                raise ValueError("imitation+FRB sweeps phi, which must lie in [0, 1]")
        elif any(v < 0 for v in self.sweep):
            raise ValueError("Zipf exponents in the sweep must be non-negative")
        if self.n_investors < 2 and self.name == "imitation+FRB":
            raise ValueError("imitation needs at least 2 investors")
        return self


class RunConfig(BaseModel):
    """Effective configuration of one CLI invocation (config file merged with flags)."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    input: Optional[Path] = None
    out: Optional[Path] = None
    profile: Optional[Path] = None
    map_out: Optional[Path] = None

    tau_max: PositiveInt = settings.TAU_MAX
    min_events: Optional[NonNegativeInt] = None
    top_k: PositiveInt = settings.TOP_K_AGENTS
    conditional: bool = False
    seed: NonNegativeInt = 0
    workers: PositiveInt = settings.WORKERS

    # simulate
    model: Optional[InvestorModel] = None
    n: PositiveInt = 100_000
    m: Optional[PositiveInt] = None
    beta: float = Field(default=1.5, gt=1.0)
    v_min: PositiveInt = 1
    pool_size: PositiveInt = 5
    run_tail: float = Field(default=1.5, gt=1.0)
    n_min: PositiveInt = 1
    p: float = Field(default=0.9, ge=0.0, le=1.0)
    zipf_investors: Optional[float] = Field(default=None, ge=0.0)

    # map
    kind: Optional[Literal["fixed", "dynamic", "correlated"]] = None
    phi: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    network_seed: Optional[NonNegativeInt] = None

    # nulltest
    replicates: PositiveInt = settings.SHUFFLE_REPLICATES
    alpha: float = Field(default=settings.ALPHA, gt=0.0, lt=1.0)
    scheme: Literal["independent", "joint"] = "independent"

    # scenario
    name: Optional[ScenarioName] = None
    sweep: Optional[str] = None
    seeds: Optional[str] = None
    n_brokers: PositiveInt = 50
    zipf_exponent: float = Field(default=0.9, ge=0.0)
    investor_model: InvestorModel = "public-info"

    @field_validator("*", mode="before")
    @classmethod
    def _blank_is_unset(cls, v: Any) -> Any:
        return None if isinstance(v, str) and v.strip() == "" else v

    @model_validator(mode="after")
    def _check_required(self) -> Self:
        missing = [key for key in REQUIRED[self.command] if getattr(self, key) is None]
        if missing:
            raise ValueError(f"{self.command} needs: {', '.join('--' + k.replace('_', '-') for k in missing)}")
        if self.out is None and self.command in DEFAULT_OUT:
            self.out = self.input.with_name(f"{self.input.stem}_{self.command}")
        if self.kind == "correlated" and self.phi is None:
            raise ValueError("a correlated map needs --phi")
        if self.kind in ("fixed", "dynamic") and self.phi is not None:
            raise ValueError("--phi only applies to correlated maps")
        if self.sweep is not None:
            parse_number_list(self.sweep)
        return self

    def seed_list(self) -> list[int]:
        if self.seeds is None:
            return [self.seed]
        return [int(v) for v in parse_number_list(self.seeds)]

    def scenario(self) -> ScenarioConfig:
        return ScenarioConfig(
            name=self.name,
            sweep=parse_number_list(self.sweep),
            seeds=self.seed_list(),
            n_investors=self.m or 10_000,
            n_brokers=self.n_brokers,
            n_events=self.n,
            tau_max=self.tau_max,
            investor_model=self.investor_model,
            zipf_exponent=self.zipf_exponent,
            p=self.p,
            beta=self.beta,
            v_min=self.v_min,
            pool_size=self.pool_size,
            run_tail=self.run_tail,
            workers=self.workers,
        )

    def metadata(self) -> dict[str, str]:
        """Every set field, in declaration order, as strings."""
        return {
            key: str(value)
            for key, value in self.model_dump().items()
            if value is not None
        }
