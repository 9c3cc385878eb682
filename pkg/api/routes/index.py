from fastapi.routing import APIRouter

from core.config import settings

index_routing = APIRouter()


@index_routing.get("/")
async def index_route():
    return {
        "message": settings.PROJECT_NAME,
        "tools": ["event_log", "decomposition", "simulators", "brokerage", "stats"],
    }
