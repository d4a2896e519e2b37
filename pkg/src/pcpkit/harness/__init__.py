"""Statistics helpers, reports, the suite runner and the command line."""
from .report import ExperimentReport
from .stats import (BinomDist, Probability, binom_statdist, clopper_pearson, enumerate_or_sample, make_rng,
                    second_moment_bound)

__all__ = ["ExperimentReport", "BinomDist", "Probability", "binom_statdist", "clopper_pearson",
           "enumerate_or_sample", "make_rng", "second_moment_bound"]
