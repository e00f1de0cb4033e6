"""Disk oracles: how fast the P1 solver approaches tor(B) = -pi/16 and j_{0,1}^2.

Run:  python demos/01_disk_oracles.py
"""
import numpy as np

from torsionlab import closed_forms as cf
from torsionlab.fem import solve_eigen, torsional_rigidity
from torsionlab.geometry import StarDomain, mesh_star_domain

exact_tor = cf.ball_torsional_rigidity(2)
exact_lam = cf.disk_eigenvalue(1)
print(f"tor(B) = {exact_tor:.10f}   lambda_1(B) = {exact_lam:.10f}")
print(f"{'h':>6} {'vertices':>9} {'tor err':>11} {'lambda1 err':>12} {'gap 2-3':>10}")

hs = [0.08, 0.04, 0.02]
errs = []
for h in hs:
    mesh = mesh_star_domain(StarDomain.disk(), h)
    t = torsional_rigidity(mesh)
    b = solve_eigen(mesh, 3)
    errs.append(abs(t - exact_tor) / abs(exact_tor))
    gap = (b.eigenvalues[2] - b.eigenvalues[1]) / b.eigenvalues[1]
    print(f"{h:6.3f} {mesh.n_vertices:9d} {errs[-1]:11.3e} "
          f"{abs(b.eigenvalues[0] - exact_lam) / exact_lam:12.3e} {gap:10.1e}")

# second order in h; the ring mesh keeps lambda_2 = lambda_3 to round-off
print(f"observed order: {np.polyfit(np.log(hs), np.log(errs), 1)[0]:.2f}")
