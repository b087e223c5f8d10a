"""irec: context-triggered recall of personal problem-solving insights.

A new problem is matched against past insights through three parallel
channels (vector, fulltext, tag hierarchy), fused, reranked by the selected
learning mode, similarity-filtered, and streamed back progressively.
"""

from .config import IrecConfig, load_config
from .graph.store import GraphStore
from .workflow.service import WorkflowService

__version__ = "0.1.0"

__all__ = ["GraphStore", "IrecConfig", "WorkflowService", "load_config", "__version__"]
