"""HTTP facade and on-disk persistence for workbench sessions."""

from .app import WorkbenchService, create_app
from .store import SessionStore

__all__ = ["SessionStore", "WorkbenchService", "create_app"]
