"""
Meshes, quadrature and the finite element spaces
================================================

A tour of the geometric building blocks: the two mesh families, the
symmetric triangle rules and what a P2 space looks like on top of them.
"""

import math

import numpy as np

from nlswave import build_space, disk_mesh, rule_for_degree, unit_square_mesh
from nlswave.fem import assemble_mass, assemble_stiffness

# %%
# The disk starts as a hexagon fan around the centre. Each red refinement
# splits every triangle in four and pushes new boundary midpoints out onto
# the circle, so the polygonal area creeps up towards pi r^2.

for level in range(6):
    m = disk_mesh((0.5, 0.5), 0.5, level)
    gap = 1 - m.area() / (math.pi * 0.25)
    print(f"level {level}: {m.nv:5d} vertices {m.nt:5d} triangles  h={m.h:.4f}  "
          f"area gap {gap:.2e}  min angle {m.min_angle():.1f} deg")

# %%
# The square grid cuts each cell along the same diagonal. Its quality ratio
# does not depend on n.

for n in (4, 8, 16):
    m = unit_square_mesh(n)
    print(f"n={n:2d}: quality ratio {m.quality_ratio():.3f}, min angle {m.min_angle():.0f} deg")

# %%
# Quadrature rules integrate every monomial up to their degree exactly.
# On the reference triangle the exact value is a! b! / (a+b+2)!.

rule = rule_for_degree(6)
x, y = rule.xy.T
worst = max(
    abs(np.sum(rule.weights * x**a * y**b) - math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2))
    for a in range(7) for b in range(7 - a)
)
print(f"degree-6 rule, {len(rule)} points, worst monomial error {worst:.1e}")

# %%
# A P2 space adds one dof per edge. The mass matrix sums to the domain
# area and the stiffness matrix annihilates constants.

space = build_space(disk_mesh(level=3), 2)
M, K = assemble_mass(space), assemble_stiffness(space)
print(space)
print("sum(M) =", M.sum(), " vs mesh area", space.mesh.area())
print("max |K @ 1| =", np.abs(K @ np.ones(space.ndof)).max())

# %%
# Finally, draw the level-2 disk mesh.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

m = disk_mesh(level=2)
fig, ax = plt.subplots(figsize=(4, 4))
ax.triplot(m.vertices[:, 0], m.vertices[:, 1], m.triangles, lw=0.6, color="k")
ax.plot(*m.vertices[m.boundary].T, "o", ms=3, color="tab:red")
ax.set_aspect("equal")
ax.set_title("disk, level 2")
fig.savefig("disk_level2.svg", metadata={"Date": None})
