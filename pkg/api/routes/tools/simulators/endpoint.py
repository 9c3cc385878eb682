from typing import Literal, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field, NonNegativeInt

from api.routes.tools.event_log.functions import to_frame
from core.http import csv_response, http_error
from models.simulation import ImitationParams, PublicInfoParams, SplittingModelParams
from .functions.imitation import simulate_imitation
from .functions.network import build_preferential_attachment, calibrate_degree_exponent
from .functions.public_info import simulate_public_info
from .functions.splitting import simulate_splitting


class ImitationRequest(ImitationParams):
    network_seed: Optional[NonNegativeInt] = None


class CalibrationRequest(BaseModel):
    M: int = Field(default=10_000, ge=2)
    seeds: list[NonNegativeInt] = Field(default_factory=lambda: list(range(20)), min_length=2)


router = APIRouter(
    prefix="/simulators",
)


def _log_csv(log, model: Literal["splitting", "public_info", "imitation"]):
    metadata = dict(log.metadata)
    metadata["price_flags"] = "absent"
    return csv_response(to_frame(log), f"{model}_log.csv", metadata)


@router.post("/splitting")
async def simulate_splitting_model(request: SplittingModelParams):
    """
    Investor-level order flow from concurrent Pareto-sized metaorders.
    """
    try:
        return _log_csv(simulate_splitting(request), "splitting")
    except Exception as e:
        raise http_error(e, "Splitting simulation")


@router.post("/public_info")
async def simulate_public_info_model(request: PublicInfoParams):
    try:
        return _log_csv(simulate_public_info(request), "public_info")
    except Exception as e:
        raise http_error(e, "Public-information simulation")


@router.post("/imitation")
async def simulate_imitation_model(request: ImitationRequest):
    try:
        network_seed = request.seed if request.network_seed is None else request.network_seed
        network = build_preferential_attachment(request.M, network_seed)
        params = ImitationParams(**request.model_dump(exclude={"network_seed"}))
        log = simulate_imitation(network, params)
        log = log.relabel(log.agents, log.labels, network_seed=str(network_seed))
        return _log_csv(log, "imitation")
    except Exception as e:
        raise http_error(e, "Imitation simulation")


@router.post("/network/degree_exponent")
async def degree_exponent_calibration(request: CalibrationRequest):
    """Tail exponent of the preferential-attachment degree distribution over seeds."""
    try:
        mean, se = calibrate_degree_exponent(request.M, request.seeds)
        return {"M": request.M, "n_seeds": len(request.seeds), "eta": mean, "stderr": se}
    except Exception as e:
        raise http_error(e, "Degree exponent calibration")
