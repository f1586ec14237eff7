"""
Effective dynamics against the full atom-photon evolution
=========================================================

The rotation picture rests on eliminating the photon to second order in
``g0 / delta``. Here the same transit is integrated exactly in the
one-excitation block ``{|gg,1>, |ge,0>, |eg,0>}`` and compared with the
rotation by ``theta(t)``. The disagreement should shrink as ``(g0/delta)^2``.

Run ``python3 demos/tdft_vs_exact.py`` (about 10 s).
"""

from __future__ import annotations

import numpy as np

from tdft.cavity import CavityParams, theta, time_window
from tdft.exact import ExcitationBlock, atomic_entropy, compare_tdft_exact, integrate_exact

ref = CavityParams.reference_point()
block = ExcitationBlock(0)
ge, eg, gg1 = block.index(0, 1, 0), block.index(1, 0, 0), block.index(0, 0, 1)

# %% Trace the transit at the worked point
psi0 = np.zeros(block.dim, dtype=complex)
psi0[ge] = 1.0
t0, t1 = time_window(ref)
evo = integrate_exact(ref, block, psi0, t_span=(t0, t1), samples=13)
pops = evo.populations()
th = theta(ref, evo.times)
print("   t (us)   p_ge exact  cos^2(theta)   p_photon   entropy")
for t, p, a, s in zip(evo.times, pops, th, evo.states):
    print(f"{t:9.3f}  {p[ge]:10.6f}  {np.cos(a) ** 2:12.6f}  {p[gg1]:9.2e}  {atomic_entropy(s, block):8.5f}")

# %% How the error scales with the coupling at fixed reduced velocity
print("\n g0/delta   population error   entropy error")
ratios = (0.01, 0.02, 0.04)
errs = []
for r in ratios:
    rep = compare_tdft_exact(CavityParams.from_reduced(ref.v_reduced, 0.0, g0=r * ref.delta))
    errs.append(rep.max_population_error)
    print(f"{r:9.2f}   {rep.max_population_error:16.3e}   {rep.entropy_error:13.3e}")
slope = np.polyfit(np.log(ratios), np.log(errs), 1)[0]
print(f"log-log slope {slope:.3f}; the leftover is the next order of the elimination")
