"""Norm bounds behind the decay and summability conditions.

Shows the flat spectrum of the beta_tilde window matrix, the decreasing
sandwich bound for beta_n, one block factorization, and sampled ratios of
the Psi inequality.
"""

import numpy as np

from oapcert.construction import beta
from oapcert.linalg import operator_norm
from oapcert.normbounds import (
    beta_tilde_closed_form,
    beta_tilde_spectrum,
    beta_tilde_stated,
    condition_ii_bound,
    condition_iii_bound,
    factorization_check,
    oh_row_proj_norm,
    psi_sample_check,
)
from oapcert.partitions import generate_partitions

ps = generate_partitions(12, "greedy", seed=0)

n = 5
s = beta_tilde_spectrum(n)
print(f"beta_tilde_{n}: {s.size} singular values, {np.sum(s > 1e-12)} nonzero")
print(f"  nonzero value {s[0]:.12f}, closed form {beta_tilde_closed_form(n):.12f}, reference {beta_tilde_stated(n):.12f}")

print(" n   ||beta_n||   bound")
for n in range(2, 8):
    print(f"{n:2d}  {operator_norm(beta(n).dense()):.6f}  {condition_ii_bound(n, ps):.6f}")

print("identity on 16 points in OH x R:", oh_row_proj_norm(np.eye(16)), "= 16^(3/4)")

A = ps[7].nabla[0]
cert = factorization_check(A, 6, ps)
print(f"block {A}: composite equals alpha exactly: {cert.exact_ok}, trace residual {cert.max_trace_residual:.1e}")

rep = psi_sample_check(A, ps, dim=6, samples=200, seed=1)
print(f"Psi sampling on {A}: max ratio {rep.max_ratio:.4f} (bound 18)")

# certifying Nabla_{n+1} needs level n+2, so n <= 10 here
for n in (3, 8, 10):
    b = condition_iii_bound(n, ps)
    print(f"level {b.n}: middle {b.middle:.3f} <= final {b.final:.3f} (m = {b.m})")
