"""Pairwise driving-trajectory evaluation toolkit.

Rule-based scoring of 4 s planning trajectories over symbolic scenes,
mining of ambiguous preference pairs, pluggable pairwise judges, an
annotation service, and an evaluation harness with a position-flip
robustness check.
"""

SCENE_SCHEMA = "critic-bench/scene/v1"
API_SCHEMA = "critic-bench/api/v1"
DATASET_SCHEMA = "critic-bench/dataset/v1"
REPORT_SCHEMA = "critic-bench/report/v1"
VOCAB_SCHEMA = "critic-bench/vocab/v1"

__version__ = "0.1.0"
