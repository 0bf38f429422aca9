"""Cloud hub: unified state pool, instruction routing, administration."""

from .client import AgentProcess, ControllerProcess, HubClient, ObserverTap
from .core import (
    Channel,
    CorrespondenceTable,
    HubCore,
    HubCounters,
    POOL_LOG_HEADER,
    PoolEntry,
)
from .server import HubServer

__all__ = [
    "AgentProcess",
    "Channel",
    "ControllerProcess",
    "CorrespondenceTable",
    "HubClient",
    "HubCore",
    "HubCounters",
    "HubServer",
    "ObserverTap",
    "POOL_LOG_HEADER",
    "PoolEntry",
]
