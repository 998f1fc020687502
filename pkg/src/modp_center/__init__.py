"""Finite-level computations around the Bernstein center of mod-p representations.

Permutation-module invariants, towers of finite group actions, twisted
conjugation fixed spaces, Mackey bookkeeping and truncated completed group
rings, each checked by exact linear algebra over GF(p).
"""

__version__ = "0.1.0"
