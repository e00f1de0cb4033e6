"""Ellipses E_eps: the torsion deficit is quadratic in eps, the H^1 distance only linear.

Run:  python demos/02_ellipse_family.py
"""
import numpy as np

from torsionlab import closed_forms as cf
from torsionlab.functionals import ResolventContext, default_dictionary, discrete_bias
from torsionlab.geometry import StarDomain

h = 0.03
bias = discrete_bias(h)[0]
eps = np.array([0.025, 0.05, 0.1, 0.2])
rows = []
for e in eps:
    ctx = ResolventContext(StarDomain.ellipse_eps(e), h)
    fem = ctx.tor - cf.ball_torsional_rigidity(2) - bias
    exact = cf.ellipse_torsion(e)[1]
    b2 = max(ctx.beta_sq(f) for _, f in default_dictionary())
    rows.append((e, exact, fem, b2, cf.h1_distance_ellipse(e)))
    print(f"eps={e:5.3f}  deficit exact {exact:.4e}  FEM {fem:.4e}  "
          f"max beta^2 {b2:.4e}  grad distance {rows[-1][-1]:.4e}")

R = np.array(rows)
slope = lambda y: np.polyfit(np.log(R[:, 0]), np.log(y), 1)[0]
print(f"slopes: deficit {slope(R[:, 1]):.2f}, beta^2 {slope(R[:, 3]):.2f}, "
      f"gradient distance {slope(R[:, 4]):.2f}")
# the deficit/beta^2 ratio settles to a constant: the resolvent distance controls the deficit
print("deficit / beta^2:", np.round(R[:, 2] / R[:, 3], 3))
