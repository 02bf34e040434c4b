"""Multi-engine ASP toolkit.

Parses ground and non-ground logic programs, extracts syntactic feature
vectors, trains small from-scratch classifiers (kNN, decision lists), and
drives black-box grounders/solvers under CPU and memory limits through a
selection pipeline and a benchmarking harness.
"""

__version__ = "0.1.0"
