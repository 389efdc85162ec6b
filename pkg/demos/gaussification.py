"""A non-Gaussian state that looks Gaussian after a short time.

Twelve sites start in a product of (|1100> + |0011>)/sqrt(2) blocks, which
breaks Wick's rule maximally on each block.  Under free hopping the local
four-point functions soon agree with Wick's rule to within about 10%.
"""

from quenchlab.model import nearest_neighbour
from quenchlab.oracle import build_hamiltonian, evolve_state, paired_state, wick_deviation

L = 12
psi = paired_state(L // 4)
H = build_hamiltonian(nearest_neighbour(L))
quartets = [tuple((x + j) % L for j in range(4)) for x in range(L)]
for t in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 6.0):
    print(f"t = {t:4.2f}   Wick violation {wick_deviation(evolve_state(psi, H, t), quartets):.3f}")
