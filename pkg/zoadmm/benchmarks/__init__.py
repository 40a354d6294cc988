"""Problem builders, datasets and the desk-scale comparison suite."""

from .datasets import Dataset, load_libsvm, synth_dataset
from .graphs import GraphMatrix, build_graph
from .losses import CorrentropyOracle, LogisticOracle, QuadraticOracle, correntropy_oracle
from .problems import build_fused_lasso_problem, build_group_split_problem, build_lasso_problem

__all__ = [
    "CorrentropyOracle",
    "Dataset",
    "GraphMatrix",
    "LogisticOracle",
    "QuadraticOracle",
    "build_fused_lasso_problem",
    "build_graph",
    "build_group_split_problem",
    "build_lasso_problem",
    "correntropy_oracle",
    "load_libsvm",
    "synth_dataset",
]
