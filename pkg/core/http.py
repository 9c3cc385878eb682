import io
import logging
from typing import Any

import pandas as pd
from fastapi import HTTPException, status
from fastapi.responses import StreamingResponse

from core.errors import OrderFlowError
from core.outputs import write_frame

logger = logging.getLogger(__name__)


def http_error(error: Exception, action: str) -> HTTPException:
    """Toolkit errors keep their own status; anything else is a 500."""
    if isinstance(error, HTTPException):
        return error
    if isinstance(error, OrderFlowError):
        return HTTPException(status_code=error.status_code, detail=error.message)
    logger.exception("%s failed", action)
    return HTTPException(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        detail=f"{action} failed: {error}",
    )


def csv_response(frame: pd.DataFrame, filename: str, metadata: dict[str, Any] | None = None) -> StreamingResponse:
    buffer = io.StringIO()
    write_frame(frame, buffer, metadata)
    return StreamingResponse(
        io.BytesIO(buffer.getvalue().encode("utf-8")),
        media_type="text/csv",
        headers={"Content-Disposition": f"attachment; filename={filename}"},
    )
