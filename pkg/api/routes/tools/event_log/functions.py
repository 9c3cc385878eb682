import io
import logging
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from core.errors import EmptyLogError, ParameterError, ParseError
from core.outputs import parse_metadata, write_frame
from models.events import AgentSummary, EventLog

logger = logging.getLogger(__name__)

SIGN_TOKENS = {"B": 1, "S": -1, "+1": 1, "1": 1, "-1": -1}
FLAG_TOKENS = {"0": False, "1": True}
REQUIRED_COLUMNS = ("sign", "agent")


def ingest(path: str | Path, format: Literal["csv"] = "csv") -> EventLog:
    if format != "csv":
        raise ParameterError(f"unsupported event-log format: {format}")
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"event log not found: {path}")
    return parse_csv_text(path.read_text(encoding="utf-8"))


def parse_csv_text(text: str) -> EventLog:
    """Parse the `sign,agent[,price_changed]` format.

    Leading `#` lines are metadata. Line numbers in errors count lines after the
    header, blank ones included, the first of them being line 1.
    """
    lines = text.splitlines()
    n_meta = 0
    while n_meta < len(lines) and lines[n_meta].startswith("#"):
        n_meta += 1
    metadata = parse_metadata(lines[:n_meta])
    kept = [(k, line) for k, line in enumerate(lines[n_meta:]) if line.strip()]
    if not kept:
        raise EmptyLogError("event log is empty")
    body = "\n".join(line for _, line in kept)
    # blank lines are dropped, errors still point at the line as it sits in the file
    record_lines = np.array([k for k, _ in kept[1:]], dtype=np.int64)

    try:
        frame = pd.read_csv(
            io.StringIO(body),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV: {e}")

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"header lacks required column(s): {', '.join(missing)}", line=0)
    if frame.empty:
        raise EmptyLogError("event log has a header but no events")

    signs = _parse_column(frame, "sign", SIGN_TOKENS, "sign token", record_lines)

    agents = frame["agent"].fillna("").str.strip()
    blank = (agents == "").to_numpy()
    if blank.any():
        raise ParseError("missing agent field", line=int(record_lines[np.argmax(blank)]))

    has_flags = "price_changed" in frame.columns and metadata.get("price_flags") != "absent"
    if "price_changed" in frame.columns:
        flags = _parse_column(frame, "price_changed", FLAG_TOKENS, "price_changed value", record_lines)
    else:
        flags = np.zeros(len(frame), dtype=bool)

    codes, uniques = pd.factorize(agents, sort=False)
    log = EventLog(
        signs=signs.astype(np.int8),
        agents=codes,
        price_changed=flags.astype(bool),
        labels=tuple(str(u) for u in uniques),
        has_price_flags=has_flags,
        metadata=metadata,
    )
    logger.info("ingested %d events from %d agents", log.N, log.M)
    return log


def _parse_column(frame: pd.DataFrame, column: str, tokens: dict, what: str, record_lines: np.ndarray) -> np.ndarray:
    raw = frame[column].fillna("").str.strip()
    mapped = raw.map(tokens)
    bad = mapped.isna().to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        token = raw.iloc[row]
        line = int(record_lines[row])
        if token == "":
            raise ParseError(f"missing {column} field", line=line)
        raise ParseError(f"bad {what} {token!r}", line=line)
    return mapped.to_numpy()


def to_frame(log: EventLog) -> pd.DataFrame:
    labels = np.asarray(log.labels, dtype=object)
    return pd.DataFrame(
        {
            "sign": np.where(log.signs > 0, "+1", "-1"),
            "agent": labels[log.agents] if log.N else np.array([], dtype=object),
            "price_changed": log.price_changed.astype(int),
        }
    )


def export(log: EventLog, path) -> None:
    metadata = dict(log.metadata)
    if not log.has_price_flags:
        metadata["price_flags"] = "absent"
    write_frame(to_frame(log), path, metadata)


def filter_inactive(log: EventLog, min_events: int) -> EventLog:
    if min_events < 1:
        raise ParameterError(f"min_events must be >= 1, got {min_events}")
    counts = log.agent_counts()
    keep_agent = counts >= min_events
    if keep_agent.all():
        return log
    mask = keep_agent[log.agents]
    if not mask.any():
        raise EmptyLogError(f"no agent has {min_events} or more events")

    new_ids = np.cumsum(keep_agent) - 1
    labels = tuple(label for label, keep in zip(log.labels, keep_agent) if keep)
    logger.info(
        "filter_inactive(min_events=%d): kept %d of %d agents, %d of %d events",
        min_events, len(labels), log.M, int(mask.sum()), log.N,
    )
    return EventLog(
        signs=log.signs[mask],
        agents=new_ids[log.agents[mask]],
        price_changed=log.price_changed[mask],
        labels=labels,
        has_price_flags=log.has_price_flags,
        metadata={**log.metadata, "filtered_min_events": str(min_events)},
    )


def agent_summaries(log: EventLog) -> list[AgentSummary]:
    if log.N == 0:
        raise EmptyLogError("agent summaries need a non-empty log")
    counts = log.agent_counts()
    P = counts / log.N
    mu = log.mean_signs()
    return [
        AgentSummary(agent=i, label=log.labels[i], N_i=int(counts[i]), P_i=float(P[i]), mu_i=float(mu[i]))
        for i in range(log.M)
    ]


def gini(log: EventLog) -> float:
    """Gini coefficient of agent activity, sum_ij |N_i - N_j| / (2 M sum_i N_i)."""
    counts = np.sort(log.agent_counts()).astype(np.float64)
    M = counts.shape[0]
    total = counts.sum()
    if M <= 1 or total == 0:
        return 0.0
    index = np.arange(1, M + 1)
    return float((2 * np.sum(index * counts) / total) / M - (M + 1) / M)


def top_agents(log: EventLog, k: int) -> np.ndarray:
    """Ids of the k most active agents, ties broken by smaller id."""
    counts = log.agent_counts()
    order = np.lexsort((np.arange(log.M), -counts))
    return order[:k]


def activity_share(log: EventLog, k: int) -> float:
    counts = log.agent_counts()
    return float(counts[top_agents(log, k)].sum() / log.N)
