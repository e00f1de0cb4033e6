"""Eigenfunctions of a slightly deformed disk stay close to Bessel modes, at the deficit's rate.

Run:  python demos/06_eigenfunction_transfer.py
"""
from torsionlab.fem import solve_eigen
from torsionlab.geometry import StarDomain, mesh_star_domain
from torsionlab.transfer import compute_transfer, match_multiplicity, match_simple

h = 0.02
for eps in (0.02, 0.05, 0.1):
    dom = StarDomain.ellipse_eps(eps)
    bundle = solve_eigen(mesh_star_domain(dom, h), 8)
    data = compute_transfer(dom, 1, 8, h, bundle=bundle)
    s = match_simple(data)
    m = match_multiplicity(dom, (2, 3), h, bundle=bundle)
    print(f"eps={eps:4.2f}: identity residual/lambda {data.identity_residual / data.lambda_ball:.1e}  "
          f"|u1 - u_B1|^2 {s.distance:.3e}  pair residual {m.residual:.3e}  deficit {s.deficit:.3e}")
    print("         alignment of the split pair:\n", m.d.round(4))
