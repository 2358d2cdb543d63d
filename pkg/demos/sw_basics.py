"""Exact versus approximate SW on two small diagrams.

Run with ``python demos/sw_basics.py``. Prints the exact value, the grid
approximation for growing direction counts, and how SW relates to the
optimal-matching distances on the same pair.
"""

import numpy as np

from pdsw import PersistenceDiagram, bottleneck, diagram_distance, sw_approx, sw_exact

a = PersistenceDiagram(np.array([[0.0, 1.0], [0.2, 0.9], [0.5, 2.0]]))
b = PersistenceDiagram(np.array([[0.1, 1.2], [0.6, 1.7]]))

exact = sw_exact(a, b)
print(f"exact SW           {exact:.10f}")

# the grid estimate converges to the exact value as directions grow
for m in (2, 6, 10, 50, 200):
    approx = sw_approx(a, b, m)
    print(f"approx M={m:<4d}      {approx:.10f}  (ratio {approx / exact:.5f})")

d1 = diagram_distance(a, b, 1)
print(f"\nd1                 {d1:.10f}")
print(f"bottleneck         {bottleneck(a, b):.10f}")
print(f"SW <= 2 sqrt(2) d1 holds: {exact <= 2 * np.sqrt(2) * d1}")

# points on the diagonal carry no information
padded = PersistenceDiagram(np.vstack([a.points, [[0.3, 0.3]]]))
print(f"SW with a diagonal point added: {sw_exact(padded, b):.10f}")
