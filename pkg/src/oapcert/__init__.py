"""Finite-dimensional certification of an operator Hilbert space failing the
operator approximation property.

Modules
-------
indexing      dyadic levels, the nine index functions and the vectors y_j
partitions    Delta/Nabla partition pairs, generators and the verifier
linalg        exact dyadic vectors, SVD, Schatten and row-space norms
construction  z_i, dual functionals, beta_n and their differences
normbounds    factorization bounds for the three conditions
enflo         orchestration and the verification report
cli           command-line entry point
"""

__version__ = "0.1.0"
