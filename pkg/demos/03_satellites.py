"""Core disk plus two small satellites: deficit ~ r^n while beta^2 ~ r^(n+4-2n/p).

For p < n/2 the ratio beta^2 / deficit blows up as r -> 0, so no power of the
deficit can bound the resolvent distance measured with such forcings.

Run:  python demos/03_satellites.py
"""
import numpy as np

from torsionlab.closed_forms import satellite_example

n = 3
r = np.geomspace(0.01, 0.1, 5)
for p in (1.0, 1.2, 2.0):
    vals = np.array([satellite_example(n, x, p) for x in r])
    sd = np.polyfit(np.log(r), np.log(vals[:, 0]), 1)[0]
    sb = np.polyfit(np.log(r), np.log(vals[:, 1]), 1)[0]
    print(f"p={p:3.1f}: deficit slope {sd:.3f}, beta^2 slope {sb:.3f} "
          f"(predicted {n + 4 - 2 * n / p:.3f})")
    print("        beta^2/deficit:", " ".join(f"{v:9.3e}" for v in vals[:, 1] / vals[:, 0]))
