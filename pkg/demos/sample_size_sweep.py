"""
Error versus sample size
========================

A small version of the ``figure1`` benchmark: median adjacency error of
each estimator as the number of samples grows.
"""

from limvam.benchmark import CellConfig, run_suite, summarize

configs = [CellConfig("figure1-gaussian", n) for n in (100, 1000, 10000)]
rows = run_suite("figure1", seeds=10, configs=configs)

for (config, method), err in summarize(rows, "b_error").items():
    print(f"{config:28s} {method:12s} median b_error {err:.3f}")
