"""Exact tools for probabilistically checkable proofs at desk scale.

Modules: ``exactmath`` (rationals and certified square roots), ``specgraph``
(rotation-map expanders), ``csp`` (constraint instances), ``hadamard``
(Walsh-Hadamard codes and the exponential-size verifier), ``dinur`` (the
reduction pipeline) and ``harness`` (statistics, reports, command line).
"""
__version__ = "0.1.0"
