"""Randomness cost of Markovianization for pure states, two ways.

Route one evaluates the closed block formula on the Koashi-Imoto
decomposition of the AC marginal: H({p_j}) + 2 sum_j p_j S(phi_j^aR).
Route two never touches the decomposition: it builds the transfer matrix
of the recovery-and-discard channel, gates on its hermiticity, projects
onto its fixed subspace, and reads the cost off the spectrum of the
evolved purification.  The two routes must agree wherever the second one
applies.

Also here: the Markov-state predicate and decomposition, Petz
recoverability residuals, cost bounds against (conditional) mutual
information, and constructors for three closed-form state families.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import (
    apply_channel,
    ergodic_projector,
    is_self_adjoint,
    petz_channel,
    reshuffle,
    transfer_matrices,
)
from .entropy import ProbDist, qcmi, qmi, shannon, trace_norm, vn_entropy
from .kidec import KIDecomposition, TripartiteKI, ki_decompose, ki_tripartite
from .linalg import (
    DensityOp,
    PureVec,
    SystemLayout,
    ValidationError,
    marginal,
    partial_trace,
    permute_op,
    permute_vec,
    purify,
)

HERMITICITY_GATE = 1e-9
TWO_ROUTE_TOL = 1e-6


@dataclass(frozen=True)
class CostReport:
    """Cost and information quantities of one tripartite state.

    ``m_algorithm`` is None when the spectral route does not apply (the
    transfer matrix is not Hermitian) or the input is mixed; ``m_formula``
    is None for mixed inputs, where no cost formula is available and only
    the information bounds are reported.
    """

    m_formula: float | None
    m_algorithm: float | None
    qcmi: float
    qmi_a_bc: float
    self_adjoint: bool | None
    blocks: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class MarkovDecomposition:
    """Block form of a Markov state exposed by the KI isometry on B."""

    dec: KIDecomposition
    terms: tuple[tuple[float, DensityOp, DensityOp], ...]
    residual: float

    @property
    def weights(self) -> np.ndarray:
        return np.array([q for q, _, _ in self.terms])


@dataclass(frozen=True)
class RecoveryReport:
    """Trace-norm residuals of the two Petz reconstructions."""

    from_ab: float
    from_bc: float


def markov_cost_formula(tki: TripartiteKI | KIDecomposition) -> float:
    """Block formula: H({p_j}) + 2 sum_j p_j S(phi_j^aR), in bits."""
    dec = tki.base if isinstance(tki, TripartiteKI) else tki
    probs = [b.p for b in dec.blocks]
    quantum = sum(b.p * vn_entropy(partial_trace(b.phi, ["aR"])) for b in dec.blocks)
    return shannon(probs) + 2.0 * quantum


def markov_cost_algorithm(psi: PureVec, a: Sequence[str] = ("A",),
                          b: Sequence[str] = ("B",), c: Sequence[str] = ("C",),
                          hermiticity_tol: float = HERMITICITY_GATE,
                          ) -> float | None:
    """Spectral route: transfer matrix, hermiticity gate, fixed-space
    projector, entropy of the evolved purification.

    Returns None when the hermiticity gate fails (the route is not
    applicable to the state).
    """
    if not isinstance(psi, PureVec) or not psi.normalized:
        raise ValidationError("the spectral route requires a normalized pure state")
    rho_ac = marginal(psi, list(a) + list(c))
    t1, _, lam = transfer_matrices(rho_ac, a, c)
    if not is_self_adjoint(lam, tol=hermiticity_tol):
        return None
    lam_inf = ergodic_projector(lam)
    omega_inf = reshuffle(lam_inf.mat @ t1.mat, t1.d)
    vals = np.linalg.eigvalsh((omega_inf + omega_inf.conj().T) / 2)
    return shannon(np.clip(vals, 0.0, None))


def is_markov_state(rho: DensityOp, a: Sequence[str] = ("A",),
                    b: Sequence[str] = ("B",), c: Sequence[str] = ("C",),
                    tol: float = 1e-9) -> bool:
    """Whether I(A:C|B) vanishes within tolerance."""
    return qcmi(rho, a, b, c) <= tol


def markov_decomposition(ups: DensityOp, a: Sequence[str] = ("A",),
                         b: Sequence[str] = ("B",), c: Sequence[str] = ("C",),
                         tol: float = 1e-7, markov_tol: float = 1e-8,
                         rng: np.random.Generator | None = None,
                         ) -> MarkovDecomposition:
    """Decompose a Markov state over the KI blocks of its BC marginal.

    The B factor splits into a classical index i, a piece b_L correlated
    only with A, and a piece b_R correlated only with C; the state is the
    mixture over i of sigma_i on (A, b_L) with phi_i on (b_R, C).
    """
    a, b, c = list(a), list(b), list(c)
    value = qcmi(ups, a, b, c)
    if value > markov_tol:
        raise ValidationError(f"I(A:C|B) = {value:.3e} exceeds {markov_tol:.0e}; "
                              "not a Markov state")
    dec = ki_decompose(partial_trace(ups, b + c), b, c, tol=tol, rng=rng)
    d_b0, d_bl, d_br = dec.dims
    ordered = permute_op(ups, b + a + c)
    d_b = ordered.layout.dim_of(b)
    d_a = ordered.layout.dim_of(a)
    d_c = ordered.layout.dim_of(c)
    big = np.kron(dec.gamma_total, np.eye(d_a * d_c))
    moved = big @ ordered.mat @ big.conj().T
    tens = moved.reshape(d_b0, d_bl, d_br, d_a, d_c, d_b0, d_bl, d_br, d_a, d_c)
    a_layout = ordered.layout.restrict(a)
    terms = []
    model = np.zeros_like(tens)
    for blk in dec.blocks:
        i = blk.index
        sub = tens[i, :blk.dim_l, :blk.dim_r, :, :, i, :blk.dim_l, :blk.dim_r, :, :]
        q = float(np.einsum("lrxclrxc->", sub).real)
        sigma = np.einsum("lrxcmryc->xlym", sub).reshape(
            d_a * blk.dim_l, d_a * blk.dim_l) / q
        phi = np.einsum("lrxcltxd->rctd", sub).reshape(
            blk.dim_r * d_c, blk.dim_r * d_c) / q
        sig_op = DensityOp(a_layout + SystemLayout([("bL", blk.dim_l)]), sigma)
        phi_op = DensityOp(SystemLayout([("bR", blk.dim_r)]) + ordered.layout.restrict(c),
                           phi)
        model[i, :blk.dim_l, :blk.dim_r, :, :, i, :blk.dim_l, :blk.dim_r, :, :] = (
            q * np.einsum("xlym,rctd->lrxcmtyd",
                          sigma.reshape(d_a, blk.dim_l, d_a, blk.dim_l),
                          phi.reshape(blk.dim_r, d_c, blk.dim_r, d_c)))
        terms.append((q, sig_op, phi_op))
    residual = float(np.linalg.norm(tens - model))
    if residual > tol:
        raise ValidationError(f"Markov decomposition residual {residual:.3e} > {tol:.0e}")
    return MarkovDecomposition(dec, tuple(terms), residual)


def recovery_check(ups: DensityOp, a: Sequence[str] = ("A",),
                   b: Sequence[str] = ("B",), c: Sequence[str] = ("C",),
                   ) -> RecoveryReport:
    """Residuals of reconstructing the state by Petz maps acting on B.

    ``from_ab``: rebuild C from the AB marginal via the Petz map of the BC
    marginal.  ``from_bc``: rebuild A from the BC marginal via the Petz
    map of the AB marginal.  Both vanish exactly on Markov states.
    """
    a, b, c = list(a), list(b), list(c)
    order = a + b + c
    target = permute_op(ups, order)
    rec_c = petz_channel(partial_trace(ups, b + c), b, c)
    got1 = apply_channel(rec_c, partial_trace(ups, a + b), output_order=order)
    rec_a = petz_channel(partial_trace(ups, a + b), b, a)
    got2 = apply_channel(rec_a, partial_trace(ups, b + c), output_order=order)
    return RecoveryReport(
        from_ab=trace_norm(got1.mat - target.mat),
        from_bc=trace_norm(got2.mat - target.mat),
    )


def bounds_check(psi: PureVec | DensityOp, a: Sequence[str] = ("A",),
                 b: Sequence[str] = ("B",), c: Sequence[str] = ("C",),
                 rng: np.random.Generator | None = None,
                 bound_tol: float = 1e-7) -> CostReport:
    """Full cost report with the sandwich I(A:C|B) <= M <= I(A:BC) enforced."""
    a, b, c = list(a), list(b), list(c)
    rho = psi.density() if isinstance(psi, PureVec) else psi
    cond = qcmi(rho, a, b, c)
    total = qmi(rho, a, b + c)
    if not isinstance(psi, PureVec):
        return CostReport(None, None, cond, total, None, ())
    tki = ki_tripartite(psi, a, b, c, rng=rng)
    m_formula = markov_cost_formula(tki)
    blocks = tuple((blk.p, vn_entropy(partial_trace(blk.phi, ["aR"])))
                   for blk in tki.blocks)
    rho_ac = marginal(psi, a + c)
    _, _, lam = transfer_matrices(rho_ac, a, c)
    adjoint = is_self_adjoint(lam, tol=HERMITICITY_GATE)
    m_algorithm = markov_cost_algorithm(psi, a, b, c) if adjoint else None
    if not (cond - bound_tol <= m_formula <= total + bound_tol):
        raise ValidationError(
            f"cost {m_formula} violates bounds [{cond}, {total}]")
    if m_algorithm is not None and abs(m_formula - m_algorithm) > TWO_ROUTE_TOL:
        raise ValidationError(
            f"routes disagree: formula {m_formula} vs spectral {m_algorithm}")
    return CostReport(m_formula, m_algorithm, cond, total, adjoint, blocks)


def cost_matches_qcmi(psi: PureVec, a: Sequence[str] = ("A",),
                   b: Sequence[str] = ("B",), c: Sequence[str] = ("C",),
                   tol: float = TWO_ROUTE_TOL,
                   rng: np.random.Generator | None = None) -> bool:
    """Whether the cost coincides with I(A:C|B) (value-level test)."""
    tki = ki_tripartite(psi, a, b, c, rng=rng)
    cond = qcmi(psi.density(), a, b, c)
    return abs(markov_cost_formula(tki) - cond) <= tol


def _max_entangled(d: int) -> np.ndarray:
    v = np.zeros(d * d)
    for k in range(d):
        v[k * d + k] = 1.0
    return v / np.sqrt(d)


def build_example(family: str, d: int | None = None, lam=None) -> PureVec:
    """Construct one of the three closed-form tripartite families.

    VIA(d, lam): dims (d, d^2+1, d); an entangled AC pair witnessed by B,
      interpolating from an exact Markov state at lam = 1/d^2 to a
      maximally entangled AC marginal at lam = 1.  Requires
      1/d^2 <= lam <= 1.
    VIB(d, lam): dims (d+1, d+1, d); superposition of B-witnessed AC
      entanglement and A-witnessed BC entanglement; 0 <= lam <= 1.
    VIC(lam vector): dims (d, d, d) with d = len(lam); classically
      correlated GHZ-type state with Schmidt weights lam.
    """
    fam = family.upper()
    if fam == "VIA":
        if d is None or lam is None:
            raise ValidationError("VIA requires d and lambda")
        lam = float(lam)
        if not (1.0 / d**2 - 1e-12 <= lam <= 1.0 + 1e-12):
            raise ValidationError(f"VIA requires 1/d^2 <= lambda <= 1, got {lam}")
        d_b = d * d + 1
        vec = np.zeros((d, d_b, d))
        w0 = np.sqrt(max(0.0, (d * d * lam - 1.0) / (d * d - 1.0)))
        w1 = np.sqrt(max(0.0, (1.0 - lam) / (d * d - 1.0)))
        for k in range(d):
            vec[k, 0, k] += w0 / np.sqrt(d)
        for k in range(d):
            for l in range(d):
                vec[k, 1 + k * d + l, l] += w1
        lay = SystemLayout([("A", d), ("B", d_b), ("C", d)])
        return PureVec(lay, vec.reshape(-1))
    if fam == "VIB":
        if d is None or lam is None:
            raise ValidationError("VIB requires d and lambda")
        lam = float(lam)
        if not (-1e-12 <= lam <= 1.0 + 1e-12):
            raise ValidationError(f"VIB requires 0 <= lambda <= 1, got {lam}")
        lam = min(max(lam, 0.0), 1.0)
        vec = np.zeros((d + 1, d + 1, d))
        for k in range(1, d + 1):
            vec[k, 0, k - 1] += np.sqrt(lam / d)
            vec[0, k, k - 1] += np.sqrt((1.0 - lam) / d)
        lay = SystemLayout([("A", d + 1), ("B", d + 1), ("C", d)])
        return PureVec(lay, vec.reshape(-1))
    if fam == "VIC":
        if lam is None:
            raise ValidationError("VIC requires a lambda vector")
        weights = ProbDist(lam).weights
        dd = len(weights)
        if d is not None and d != dd:
            raise ValidationError(f"VIC dimension {d} != len(lambda) = {dd}")
        vec = np.zeros((dd, dd, dd))
        for k, w in enumerate(weights):
            vec[k, k, k] = np.sqrt(w)
        lay = SystemLayout([("A", dd), ("B", dd), ("C", dd)])
        return PureVec(lay, vec.reshape(-1))
    raise ValidationError(f"unknown family {family!r}; expected VIA, VIB or VIC")


def mixed_with_product(psi: PureVec, lam: float, sigma_c: DensityOp,
                       a: Sequence[str] = ("A",), b: Sequence[str] = ("B",),
                       c: Sequence[str] = ("C",), ref_label: str = "B*",
                       ) -> PureVec:
    """Purification of lam * Psi_AC + (1 - lam) * Psi_A (x) sigma_C.

    The cost M_{A|B} is invariant across this family for lam > 0, because
    the mixing does not change which operations on A preserve the AC
    marginal.  The purifying system plays the role of B.
    """
    if not 0.0 < lam <= 1.0:
        raise ValidationError(f"mixing weight must be in (0, 1], got {lam}")
    a, c = list(a), list(c)
    rho_ac = marginal(psi, a + c)
    rho_ac = permute_op(rho_ac, a + c)
    rho_a = partial_trace(rho_ac, a)
    sig = permute_op(sigma_c, c) if sigma_c.layout.labels != tuple(c) else sigma_c
    mixed = lam * rho_ac.mat + (1.0 - lam) * np.kron(rho_a.mat, sig.mat)
    op = DensityOp(rho_ac.layout, mixed)
    pur = purify(op, ref_label=ref_label)
    order = a + [pur.layout.labels[-1]] + c
    return permute_vec(pur, order)
