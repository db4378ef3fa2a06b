"""solverank: solution-aware retrieval for competitive-programming corpora.

Pipeline stages, each exposed as a CLI subcommand and as a module API:
corpus ingestion, synthetic variant generation with judge verification,
BM25 and trained dual-encoder retrieval, ranking evaluation (P@K / R@K /
MRR), and retrieval-augmented code generation scored by pass@1 per
difficulty bin.
"""

__version__ = "0.1.0"

from solverank._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["__version__", "KERNEL_BACKEND"]
