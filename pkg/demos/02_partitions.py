"""Generating and certifying the Delta / Nabla partitions.

The greedy strategy makes the Nabla blocks grow with the level while the
three block properties keep holding.  Breaking one block is caught, with a
witness pointing at the offending block.
"""

import numpy as np

from oapcert.partitions import (
    PartitionPair,
    generate_partitions,
    m_lower_bound,
    required_m,
    verify_partition_level,
    verify_partition_set,
)

ps = generate_partitions(20, "greedy", seed=0)
reports = verify_partition_set(ps)
print("levels certified:", sum(r.ok for r in reports.values()), "of", len(reports))

print(" n   m_n  required  2^(n/8-2)  #Nabla")
for n in (4, 8, 12, 16, 17, 19):
    p = ps[n]
    print(f"{n:2d}  {p.m:4d}  {required_m(n):8d}  {m_lower_bound(n):9.3f}  {p.nabla_count:6d}")

# the singleton strategy stops working once the required floor reaches 2
try:
    generate_partitions(17, "singleton")
except Exception as exc:
    print("singleton strategy:", exc)

# merge the two largest Nabla_11 blocks with a third one
pair = ps[11]
order = np.argsort([-len(b) for b in pair.nabla], kind="stable")[:3]
merged = sum((pair.nabla[k] for k in order), [])
rest = [b for k, b in enumerate(pair.nabla) if k not in set(order.tolist())]
bad = PartitionPair.from_blocks(11, pair.delta, rest + [merged], pair.m)
rep = verify_partition_level(ps[10], bad, ps[12])
print("mutated level passes?", rep.ok)
print("first failure:", rep.first_failure())
