"""Three-channel recall: BM25 index, channel runners, normalization, fusion.

Import the channel/fusion API from ``irec.recall.engine``; this package
init stays import-light because the graph store pulls in the BM25 index.
"""

from .bm25 import Bm25Index

__all__ = ["Bm25Index"]
