"""Markovianizing cost of three closed-form families, by both routes.

The block-formula route reads the cost off the Koashi-Imoto decomposition
of the AC marginal.  The spectral route builds the transfer matrix of the
recovery-and-discard channel and takes the entropy of the evolved
purification.  On these families both apply, and they agree with the
closed forms to machine precision.
"""

import numpy as np

from qmarkov import (
    binary_entropy,
    build_example,
    ki_tripartite,
    markov_cost_algorithm,
    markov_cost_formula,
    qcmi,
    shannon,
)

rng = np.random.default_rng(1)

print(f"{'state':<28} {'formula':>12} {'spectral':>12} {'closed form':>12} {'I(A:C|B)':>12}")
print("-" * 80)

cases = [
    ("GHZ weights (1/2, 1/2)", build_example("VIC", lam=(0.5, 0.5)), shannon([0.5, 0.5])),
    ("GHZ weights (1/4, 3/4)", build_example("VIC", lam=(0.25, 0.75)), shannon([0.25, 0.75])),
    ("GHZ weights (1/3,1/3,1/3)", build_example("VIC", lam=(1/3, 1/3, 1/3)), shannon([1/3] * 3)),
    ("asymmetric d=2, lam=0.2", build_example("VIB", d=2, lam=0.2), binary_entropy(0.2) + 0.4),
    ("asymmetric d=2, lam=0.5", build_example("VIB", d=2, lam=0.5), binary_entropy(0.5) + 1.0),
    ("discontinuous d=2, lam=0.6", build_example("VIA", d=2, lam=0.6), 2.0),
]

for name, psi, closed in cases:
    tki = ki_tripartite(psi, rng=rng)
    m_formula = markov_cost_formula(tki)
    m_spectral = markov_cost_algorithm(psi)
    cond = qcmi(psi.density(), ["A"], ["B"], ["C"])
    print(f"{name:<28} {m_formula:>12.9f} {m_spectral:>12.9f} {closed:>12.9f} {cond:>12.9f}")

print()
print("The cost always sits between I(A:C|B) and I(A:BC); it equals the")
print("conditional information exactly on the GHZ family and exceeds it")
print("whenever the quantum factors of the decomposition are entangled.")
