"""
Where the atoms come out maximally entangled
============================================

Prints the reduced velocity on each line ``theta(inf) = (2n + 1) pi / 4``
and checks one point per line with the full quadrature of ``g1 g2 / delta``.

Run ``python3 demos/contour_table.py``.
"""

from __future__ import annotations

import numpy as np

from tdft.cavity import CavityParams, contour_velocity, entanglement_final

zs = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
print("  n " + "".join(f"   z0={z:<4.1f}" for z in zs))
for n in range(7):
    print(f"{n:3d} " + "".join(f"{v:11.5f}" for v in contour_velocity(n, zs)))

print("\nentropy at each n, z0 = 1, by quadrature:")
for n in range(7):
    p = CavityParams.from_reduced(contour_velocity(n, 1.0), 1.0)
    print(f"  n = {n}: {entanglement_final(p, 'quadrature'):.12f}")
