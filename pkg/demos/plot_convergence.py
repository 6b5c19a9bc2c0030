"""
Convergence in space and time
=============================

Manufactured solutions make the error measurable. On the unit square the
exact solution is sin(pi x) sin(pi y) exp(-i sqrt(2) pi t). We refine h
with tau tied to h so that time errors stay out of the way, then refine
tau on a fixed fine mesh.
"""

from pathlib import Path

from nlswave import studies
from nlswave.studies import StudyConfig

out = Path("demo_out")

# %%
# Spatial study, P1 and P2. tau = h^((r+1)/2) / 4 keeps the temporal error
# O(h^(r+1)).

for r in (1, 2):
    cfg = StudyConfig(problem="example2", degree=r, study="space", levels=[8, 16, 32], T=1.0, tau_coef=0.25)
    rows = studies.converge_space(cfg)
    for row in rows:
        order = "" if row.order is None else f"{row.order:.2f}"
        print(f"P{r} 1/h={row.level:3d} tau={row.tau:.5f} err={row.l2_error:.3e} order {order}")
    studies.write_convergence_csv(out / f"space_P{r}.csv", rows)
    studies.plot_convergence(out / f"space_P{r}.svg", rows, "h", f"square, P{r}")

# %%
# Temporal study on a 32x32 P2 mesh: halving tau quarters the error.

cfg = StudyConfig(problem="example2", degree=2, study="time", levels=[32], taus=[1 / 8, 1 / 16, 1 / 32], T=1.0)
rows = studies.converge_time(cfg)
for row in rows:
    order = "" if row.order is None else f"{row.order:.2f}"
    print(f"tau={row.tau:.4f} err={row.l2_error:.3e} order {order}")
print(f"average temporal order {studies.order_avg(rows):.2f}")

# %%
# The disk problem has a source term and non-zero boundary data. P1 still
# shows second order.

cfg = StudyConfig(problem="example1", degree=1, study="space", levels=[2, 3, 4], T=1.0, tau_coef=0.25)
rows = studies.converge_space(cfg)
print("disk P1 orders", [None if x.order is None else round(x.order, 2) for x in rows])
