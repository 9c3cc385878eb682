from typing import Literal, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field, NonNegativeInt, PositiveInt

from api.routes.tools.event_log.functions import parse_csv_text
from core.config import settings
from core.http import http_error
from core.outputs import to_jsonable
from models.stats import RandomMappingPrediction, PowerLawFit
from .functions.conditional import conditional_probabilities
from .functions.fitting import fit_power_law
from .functions.measures import random_mapping_prediction, spearman
from .functions.shuffle import shuffle_test

router = APIRouter(prefix="/stats")


class RandomMappingRequest(BaseModel):
    M_prime: PositiveInt
    var_P_prime: float


class SpearmanRequest(BaseModel):
    x: list[float]
    y: list[float]


class PowerLawRequest(BaseModel):
    curve: list[float]
    taus: Optional[list[float]] = None
    tau_lo: PositiveInt = 1
    tau_hi: Optional[PositiveInt] = None
    bins_per_decade: Optional[PositiveInt] = None


class NullTestRequest(BaseModel):
    csv_text: str
    tau_max: PositiveInt = settings.TAU_MAX
    replicates: PositiveInt = settings.SHUFFLE_REPLICATES
    alpha: float = Field(default=settings.ALPHA, gt=0.0, lt=1.0)
    seed: NonNegativeInt = 0
    scheme: Literal["independent", "joint"] = "independent"


class CondProbRequest(BaseModel):
    csv_text: str
    tau_max: PositiveInt = settings.TAU_MAX


@router.post("/random_mapping", response_model=RandomMappingPrediction)
async def random_mapping_split(request: RandomMappingRequest):
    """
    Splitting and herding fractions expected when pure herders are spread at random
    over brokers.
    """
    try:
        return random_mapping_prediction(request.M_prime, request.var_P_prime)
    except Exception as e:
        raise http_error(e, "Random-mapping prediction")


@router.post("/spearman")
async def rank_correlation(request: SpearmanRequest):
    try:
        return to_jsonable({"rho": spearman(request.x, request.y)})
    except Exception as e:
        raise http_error(e, "Rank correlation")


@router.post("/power_law", response_model=PowerLawFit)
async def power_law_fit(request: PowerLawRequest):
    try:
        hi = request.tau_hi or (int(max(request.taus)) if request.taus else len(request.curve))
        return fit_power_law(request.curve, (request.tau_lo, hi), request.taus, request.bins_per_decade)
    except Exception as e:
        raise http_error(e, "Power-law fit")


@router.post("/nulltest")
async def herding_null_test(request: NullTestRequest):
    """
    Shuffle test of the herding component against its label-shuffled null.
    """
    try:
        log = parse_csv_text(request.csv_text)
        result = shuffle_test(
            log,
            request.tau_max,
            R=request.replicates,
            alpha=request.alpha,
            seed=request.seed,
            scheme=request.scheme,
        )
        frame = result.to_frame()
        frame.insert(1, "C_herd", result.observed)
        return to_jsonable({**result.summary(), "rows": frame.to_dict(orient="records")})
    except Exception as e:
        raise http_error(e, "Shuffle test")


@router.post("/condprob")
async def conditional_same_sign(request: CondProbRequest):
    try:
        log = parse_csv_text(request.csv_text)
        result = conditional_probabilities(log, request.tau_max)
        return to_jsonable({"rows": result.to_frame().to_dict(orient="records")})
    except Exception as e:
        raise http_error(e, "Conditional probabilities")
