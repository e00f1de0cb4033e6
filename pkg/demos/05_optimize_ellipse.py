"""Descent on tor + tau h(beta^2) from an ellipse: the iterates round up into a disk.

Writes demos/out/trace.csv.   Run:  python demos/05_optimize_ellipse.py
"""
from pathlib import Path

from torsionlab.functionals import PenaltyParams, beta_sq
from torsionlab.geometry import StarDomain
from torsionlab.shape_calculus import OptimizerOptions, minimize_energy, write_trace

start = StarDomain.ellipse_eps(0.1)
h = 0.03
params = PenaltyParams(a=beta_sq(start, 1.0, h), tau=1e-3)


def show(it, dom, row):
    print(f"{it:3d}  F={row.energy:.10f}  EL residual={row.residual:.3e}  "
          f"hausdorff={row.hausdorff:.3e}")


final, trace = minimize_energy(start, 1.0, params, OptimizerOptions(mesh_h=h), callback=show)
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
write_trace(trace, out / "trace.csv")
print(f"final radial mean {final.radial.a0:.6f}, max |rho - mean| "
      f"{max(abs(final.radial.a).max(), abs(final.radial.b).max()):.2e}")
