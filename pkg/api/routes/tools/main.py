from fastapi import APIRouter

from api.routes.tools.brokerage import endpoint as brokerage_router
from api.routes.tools.decomposition import endpoint as decomposition_router
from api.routes.tools.event_log import endpoint as event_log_router
from api.routes.tools.simulators import endpoint as simulators_router
from api.routes.tools.stats import router as stats_router

router = APIRouter(
    prefix="/tools",
)

router.include_router(event_log_router.router)
router.include_router(decomposition_router.router)
router.include_router(simulators_router.router)
router.include_router(brokerage_router.router)
router.include_router(stats_router.router)
