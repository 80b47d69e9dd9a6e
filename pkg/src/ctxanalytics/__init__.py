"""Context-aware analytic model management for manufacturing operations data."""

from .kb import Snapshot, fingerprint, parse_snapshot, serialize, validate
from .history import History, append, change_events, diff
from .similarity import SimilarityConfig, nearest, sim
from .registry import Registry, RegistryConfig, bind, select

__version__ = "0.1.0"
