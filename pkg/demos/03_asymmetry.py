"""The cost is not symmetric between the randomized and spectator sides.

For the asymmetric family, randomizing A costs h(lam) + 2 lam log d,
which varies smoothly with lam (and even overshoots 2 log d mid-range);
randomizing C instead costs the full 2 log d for every positive lam.  The
conditional mutual information, by contrast, is symmetric by definition.
"""

from qmarkov import build_example, markov_cost_algorithm, qcmi

d = 2
print(f"{'lam':>6} {'M (randomize A)':>16} {'M (randomize C)':>16} {'I(A:C|B)':>12}")
print("-" * 54)
for lam in (0.0, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 1.0):
    psi = build_example("VIB", d=d, lam=lam)
    m_ab = markov_cost_algorithm(psi)
    m_cb = markov_cost_algorithm(psi, a=["C"], b=["B"], c=["A"])
    cond = qcmi(psi.density(), ["A"], ["B"], ["C"])
    print(f"{lam:>6.2f} {m_ab:>16.6f} {m_cb:>16.6f} {cond:>12.6f}")

print()
print("Randomizing C must scramble a maximally entangled pair whenever one")
print("is present with any weight, while randomizing A can exploit the")
print("block structure of its marginal and pay only for the entangled share.")
