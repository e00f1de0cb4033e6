"""Boundary formulas for the first variations against central differences of remeshed flows.

Run:  python demos/04_shape_derivatives.py
"""
from torsionlab.geometry import BoundaryFunction, StarDomain, rings_for
from torsionlab.functionals import beta_sq
from torsionlab.fem import torsional_rigidity
from torsionlab.geometry import mesh_star_domain
from torsionlab.shape_calculus import boundary_density, d_beta_sq, d_torsion, flow_domain

h, t = 0.02, 1e-3
dom = StarDomain.ellipse_eps(0.1)
rings = rings_for(dom.max_radius(), h)  # same topology on both sides of the difference
dens = boundary_density(dom, 1.0, h)

for name, V in [("1", BoundaryFunction.constant(1.0)), ("cos 2t", BoundaryFunction.mode(2)),
                ("cos 3t", BoundaryFunction.mode(3))]:
    plus, minus = flow_domain(dom, V, t), flow_domain(dom, V, -t)
    fd_t = (torsional_rigidity(mesh_star_domain(plus, h, rings))
            - torsional_rigidity(mesh_star_domain(minus, h, rings))) / (2 * t)
    fd_b = (beta_sq(plus, 1.0, h, require_unit_volume=False, n_rings=rings)
            - beta_sq(minus, 1.0, h, require_unit_volume=False, n_rings=rings)) / (2 * t)
    print(f"V={name:7s} tor: {d_torsion(dom, V, density=dens):+.6e} vs {fd_t:+.6e}   "
          f"beta^2: {d_beta_sq(dom, 1.0, V, density=dens):+.6e} vs {fd_b:+.6e}")
