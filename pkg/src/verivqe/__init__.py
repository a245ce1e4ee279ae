"""verivqe: a desk-scale simulation lab for verifiable delegated VQE.

The package simulates a client that delegates the quantum part of a
variational eigensolver to an untrusted server, interleaving blinded
computation rounds with trap test rounds, and re-running optimization
steps whose gradients were corrupted beyond a tolerated threshold.
"""

__version__ = "0.1.0"
