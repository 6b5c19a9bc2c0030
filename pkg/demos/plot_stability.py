"""
Refining h at a fixed time step
===============================

No CFL condition ties tau to h. Holding tau fixed and refining the mesh,
the error does not blow up. It levels off at the temporal error for that
tau, and a smaller tau gives a lower plateau.
"""

from pathlib import Path

from nlswave import studies
from nlswave.studies import StudyConfig

cfg = StudyConfig(problem="example2", degree=1, study="stability", levels=[8, 16, 32, 64], taus=[0.1, 0.05, 0.01], T=1.0)
rows = studies.stability(cfg)

for tau, err in studies.plateaus(rows).items():
    series = [f"{r.l2_error:.3e}" for r in rows if r.tau == tau]
    print(f"tau={tau:<5g} errors {' '.join(series)}  plateau {err:.3e}")

ok, msg = studies.check_stability(rows)
print("stable:", ok, msg)

out = Path("demo_out")
studies.write_stability_csv(out / "stability_P1.csv", rows)
studies.plot_stability(out / "stability_P1.svg", rows, "square, P1, fixed tau")
