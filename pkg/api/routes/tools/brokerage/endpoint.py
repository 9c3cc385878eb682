from typing import Literal, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field, NonNegativeInt, PositiveInt, model_validator
from typing_extensions import Self

from api.routes.tools.event_log.functions import parse_csv_text, to_frame
from core.http import csv_response, http_error
from models.brokerage import BrokerProfile
from . import functions


class BrokerageRequest(BaseModel):
    csv_text: str
    kind: Literal["fixed", "dynamic", "correlated"] = "fixed"
    frequencies: Optional[list[float]] = None
    labels: Optional[list[str]] = None
    n_brokers: PositiveInt = 50
    zipf_exponent: float = Field(default=0.9, ge=0.0)
    phi: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seed: NonNegativeInt = 0
    network_seed: Optional[NonNegativeInt] = None

    @model_validator(mode="after")
    def _check_phi(self) -> Self:
        if (self.phi is not None) != (self.kind == "correlated"):
            raise ValueError("phi is required for, and only for, correlated maps")
        return self

    def profile(self) -> BrokerProfile:
        """Explicit frequencies when given, otherwise a Zipf profile."""
        if self.frequencies is not None:
            return BrokerProfile.from_weights(self.frequencies, self.labels)
        return functions.zipf_profile(self.n_brokers, self.zipf_exponent)


router = APIRouter(
    prefix="/brokerage",
)


@router.post("/")
async def map_to_brokers(request: BrokerageRequest):
    """
    Replace investors by brokers in an order log and return the broker-level log.
    """
    try:
        log = parse_csv_text(request.csv_text)
        profile = request.profile()
        if request.kind == "fixed":
            brokerage = functions.fixed_random_map(log.frequencies(), profile, request.seed)
        elif request.kind == "dynamic":
            brokerage = functions.dynamic_random_map(profile, request.seed)
        else:
            brokerage = functions.correlated_map_for_log(
                log, profile, request.phi, request.seed, request.network_seed
            )
        brokers = functions.apply_map(log, brokerage)
        _, variance = functions.realized_profile(brokers)
        metadata = {**brokers.metadata, "realized_var_P_prime": variance}
        if not brokers.has_price_flags:
            metadata["price_flags"] = "absent"
        return csv_response(to_frame(brokers), "broker_log.csv", metadata)
    except Exception as e:
        raise http_error(e, "Brokerage mapping")
