"""Index functions and the y_j vectors.

Every y_j has nine nonzero coordinates, placed by the index functions f_k,
and is also a two-term combination of the z vectors.
"""

from oapcert.construction import z_vector
from oapcert.indexing import K_RANGE, expand_y, f, lambda_coeff, level, y_as_z_combination

j = 4 * 5 + 2  # i = 5, l = 2
print(f"j = {j} lives on level {level(j)}")

# the table row: target index and coefficient for each k
for k in K_RANGE:
    t = f(k, j)
    print(f"  f_{k}({j}) = {t:3d}  level {level(t)}  lambda = {lambda_coeff(k, j):+d}")

y = expand_y(j)
print("y_j =", {idx: int(c) for idx, c in sorted(y.items())})
print("squared norm:", sum(c * c for c in y.values()))

# the same vector from the z basis
sign, p, q = y_as_z_combination(j)
print(f"y_j = {sign:+d} z_{p} - z_{q}:", (z_vector(p) * sign - z_vector(q)).entries == y)
