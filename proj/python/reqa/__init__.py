"""Sentence-level answer retrieval toolkit.

Thin Python wrapper around the C++ core: dataset conversion, BM25 and dense
dual-encoder retrieval, and P@1/MRR evaluation.
"""
try:
    from ._reqa import *  # noqa: F401,F403  (installed wheel layout)
    from ._reqa import __version__  # noqa: F401
except ImportError:
    from _reqa import *  # noqa: F401,F403  (build-tree layout)
    from _reqa import __version__  # noqa: F401
