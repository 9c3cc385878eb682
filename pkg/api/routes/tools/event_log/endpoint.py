from typing import Optional

from fastapi import APIRouter, File, Form, UploadFile
from pydantic import BaseModel, PositiveInt

from core.http import http_error
from models.events import AgentSummary
from . import functions


class EventLogRequest(BaseModel):
    csv_text: str
    min_events: Optional[PositiveInt] = None
    top: PositiveInt = 5


class EventLogResponse(BaseModel):
    N: int
    M: int
    has_price_flags: bool
    gini: float
    activity_share: float
    top_agents: list[str]
    agents: list[AgentSummary]


router = APIRouter(
    prefix="/event_log",
)


def _summarize(text: str, min_events: Optional[int], top: int) -> dict:
    log = functions.parse_csv_text(text)
    if min_events:
        log = functions.filter_inactive(log, min_events)
    k = min(top, log.M)
    return {
        "N": log.N,
        "M": log.M,
        "has_price_flags": log.has_price_flags,
        "gini": functions.gini(log),
        "activity_share": functions.activity_share(log, k),
        "top_agents": [log.labels[i] for i in functions.top_agents(log, k)],
        "agents": functions.agent_summaries(log),
    }


@router.post("/", response_model=EventLogResponse)
async def summarize_event_log(request: EventLogRequest):
    """
    Parse an order log and summarise agent activity.
    """
    try:
        return _summarize(request.csv_text, request.min_events, request.top)
    except Exception as e:
        raise http_error(e, "Event log summary")


@router.post("/upload", response_model=EventLogResponse)
async def summarize_uploaded_log(
    file: UploadFile = File(...),
    min_events: Optional[int] = Form(None),
    top: int = Form(5),
):
    try:
        text = (await file.read()).decode("utf-8")
        return _summarize(text, min_events, top)
    except Exception as e:
        raise http_error(e, "Event log summary")
