from .build import Snapshot, build_snapshot
from .server import create_app

__all__ = ["Snapshot", "build_snapshot", "create_app"]
