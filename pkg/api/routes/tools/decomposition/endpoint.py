from typing import Literal, Optional

from fastapi import APIRouter, File, Form, UploadFile
from pydantic import BaseModel, PositiveInt

from api.routes.tools.event_log.functions import filter_inactive, parse_csv_text
from core.config import settings
from core.http import csv_response, http_error
from core.outputs import to_jsonable
from . import functions

Condition = Literal["price_change", "no_price_change"]


class DecompositionRequest(BaseModel):
    csv_text: str
    tau_max: PositiveInt = settings.TAU_MAX
    condition: Optional[Condition] = None
    min_events: Optional[PositiveInt] = None


router = APIRouter(
    prefix="/decomposition",
)


def _run(text: str, tau_max: int, condition: Optional[str], min_events: Optional[int]):
    log = parse_csv_text(text)
    if min_events:
        log = filter_inactive(log, min_events)
    if condition:
        result = functions.conditional_decompose(log, tau_max, condition)
    else:
        result = functions.decompose(log, tau_max)
    return log, result


@router.post("/")
async def decompose_order_flow(request: DecompositionRequest):
    """
    Split the sign autocorrelation into splitting and herding components.
    """
    try:
        log, result = _run(request.csv_text, request.tau_max, request.condition, request.min_events)
        frame = result.to_frame()
        frame["approximation_error"] = functions.approximation_error(result)
        return to_jsonable(
            {
                "N": log.N,
                "M": log.M,
                "condition": request.condition,
                "S_bar": functions.splitting_ratio_mean(result, 1, min(request.tau_max, settings.S_BAR_TAU_MAX)),
                "rows": frame.to_dict(orient="records"),
            }
        )
    except Exception as e:
        raise http_error(e, "Decomposition")


@router.post("/download-csv")
async def download_csv(
    file: UploadFile = File(None),
    csv_text: str = Form(""),
    tau_max: int = Form(settings.TAU_MAX),
    condition: Optional[Condition] = Form(None),
    min_events: Optional[int] = Form(None),
):
    """Decomposition rows as a tidy CSV file."""
    try:
        text = (await file.read()).decode("utf-8") if file else csv_text
        log, result = _run(text, tau_max, condition, min_events)
        metadata = {"tau_max": tau_max, "N": log.N, "M": log.M}
        if condition:
            metadata["condition"] = condition
        return csv_response(result.to_frame(), "decomposition.csv", metadata)
    except Exception as e:
        raise http_error(e, "CSV generation")
