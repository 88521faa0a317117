"""Finite-copy Monte Carlo simulation of randomized Markovianization.

Works in the decomposed coordinates of a tripartite pure state: n copies
are projected onto the jointly typical region (strongly typical block
sequences, weakly typical subspaces inside each block), then hit with
random block unitaries that are Haar on each typical quantum factor and
trivial elsewhere.  The ensemble average of the projected state is an
exactly computable (subnormalized) Markov state; the simulator measures
how fast finite samples of unitaries approach it.

All dense objects live on a per-copy labeled layout with the factors
grouped by role ("a0.1", ..., "a0.n", "aR.1", ..., "C.n"); factors of
dimension one are dropped.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import ProbDist, shannon, trace_norm, vn_entropy
from .kidec import TripartiteKI
from .linalg import (
    DensityOp,
    DimensionError,
    PureVec,
    SystemLayout,
    ValidationError,
    haar_unitary,
    partial_trace,
    permute_mat,
    permute_vec,
)

# Largest dense total dimension the simulator will allocate by default.
DEFAULT_DIM_CAP = 4096
# Largest number of classical block sequences enumerated exactly.
DEFAULT_SEQUENCE_CAP = 1 << 20


@dataclass(frozen=True)
class TypicalSpec:
    """Number of copies, window width, and the sequence-set flavor."""

    n: int
    delta: float
    mode: str = "strong"

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n = {self.n} < 1")
        if not self.delta > 0:
            raise ValidationError(f"delta = {self.delta} must be positive")
        if self.mode not in ("strong", "weak"):
            raise ValidationError(f"mode {self.mode!r} not in ('strong', 'weak')")


@dataclass(frozen=True)
class BlockEntry:
    """One typical block sequence with its weight and quantum projector."""

    seq: tuple[int, ...]
    prob: float
    projector: np.ndarray = field(repr=False)
    rank: int


@dataclass(frozen=True)
class BlockStructure:
    """All typical blocks of the projected n-copy state."""

    spec: TypicalSpec
    entries: tuple[BlockEntry, ...]
    dim_r_total: int


@dataclass(frozen=True)
class SimResult:
    """Averaged outcome of the finite-sample protocol runs."""

    n: int
    delta: float
    rate: float
    n_unitaries: int
    err_to_average: float
    err_full: float
    typical_mass: float
    chernoff_n: float
    seed: int | None


def strongly_typical_set(p, n: int, delta: float,
                         max_sequences: int = DEFAULT_SEQUENCE_CAP,
                         ) -> list[tuple[tuple[int, ...], float]]:
    """All length-n sequences with empirical frequencies within delta/|J|
    of the distribution, zero-probability symbols excluded."""
    w = p.weights if isinstance(p, ProbDist) else ProbDist(p).weights
    k = len(w)
    if k ** n > max_sequences:
        raise ValidationError(f"{k}^{n} sequences exceed the cap {max_sequences}")
    window = delta / k
    out = []
    for seq in itertools.product(range(k), repeat=n):
        counts = np.bincount(seq, minlength=k)
        if any(counts[s] > 0 and w[s] <= 0 for s in range(k)):
            continue
        if all(abs(counts[s] / n - w[s]) < window for s in range(k)):
            prob = float(np.prod(w[np.array(seq)]))
            out.append((seq, prob))
    return out


def weakly_typical_set(p, n: int, delta: float,
                       max_sequences: int = DEFAULT_SEQUENCE_CAP,
                       ) -> list[tuple[tuple[int, ...], float]]:
    """All length-n sequences whose probability lies in the entropy window
    [2^(-n(H+delta)), 2^(-n(H-delta))]."""
    w = p.weights if isinstance(p, ProbDist) else ProbDist(p).weights
    k = len(w)
    if k ** n > max_sequences:
        raise ValidationError(f"{k}^{n} sequences exceed the cap {max_sequences}")
    h = shannon(w)
    lo, hi = 2.0 ** (-n * (h + delta)), 2.0 ** (-n * (h - delta))
    out = []
    for seq in itertools.product(range(k), repeat=n):
        prob = float(np.prod(w[np.array(seq)]))
        if lo <= prob <= hi and prob > 0:
            out.append((seq, prob))
    return out


def _weak_window(spectrum, m: int, delta: float,
                 ) -> list[tuple[tuple[int, ...], float]]:
    """Weakly typical eigenvalue patterns for m copies of a spectrum; the
    empty pattern qualifies when m = 0."""
    if m == 0:
        return [((), 1.0)]
    return weakly_typical_set(_renormalize(spectrum), m, delta)


def _renormalize(spectrum) -> ProbDist:
    s = np.clip(np.asarray(spectrum, dtype=np.float64), 0.0, None)
    return ProbDist(s / np.sum(s))


def _per_block_bases(tki: TripartiteKI) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per block: spectrum of the quantum-factor marginal and its
    eigenvectors embedded in the padded per-copy space."""
    d_ar = tki.base.dims[2]
    out = []
    for blk in tki.blocks:
        phi_ar = partial_trace(blk.phi, ["aR"]).mat
        vals, vecs = np.linalg.eigh(phi_ar)
        vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
        padded = np.zeros((d_ar, blk.dim_r), dtype=np.complex128)
        padded[:blk.dim_r, :] = vecs
        out.append((np.clip(vals, 0.0, None), padded))
    return out


def build_blocks(tki: TripartiteKI, spec: TypicalSpec,
                 max_sequences: int = DEFAULT_SEQUENCE_CAP) -> BlockStructure:
    """Typical block sequences with their conditional projectors.

    The projector of a block sequence j1..jn lives on the n-fold padded
    quantum factor; it selects, for every symbol j, the weakly typical
    eigenvalue patterns of that symbol's state on the copies where the
    symbol occurs.  Sequences whose projector is empty are dropped; an
    entirely empty typical region raises.
    """
    pick = strongly_typical_set if spec.mode == "strong" else weakly_typical_set
    seqs = pick(_renormalize(tki.base.probs), spec.n, spec.delta, max_sequences)
    bases = _per_block_bases(tki)
    d_ar = tki.base.dims[2]
    dim_total = d_ar ** spec.n
    entries = []
    for seq, prob in seqs:
        positions: dict[int, list[int]] = {}
        for pos, j in enumerate(seq):
            positions.setdefault(j, []).append(pos)
        per_symbol = {}
        for j, pos in positions.items():
            window = _weak_window(bases[j][0][:tki.blocks[j].dim_r],
                                  len(pos), spec.delta)
            if not window:
                per_symbol = None
                break
            per_symbol[j] = window
        if per_symbol is None:
            continue
        vectors = []
        symbols = sorted(per_symbol)
        for combo in itertools.product(*(per_symbol[j] for j in symbols)):
            pattern: dict[int, int] = {}
            for j, (subseq, _) in zip(symbols, combo):
                for pos, x in zip(positions[j], subseq):
                    pattern[pos] = x
            vec = np.ones(1, dtype=np.complex128)
            for pos in range(spec.n):
                vec = np.kron(vec, bases[seq[pos]][1][:, pattern[pos]])
            vectors.append(vec)
        if not vectors:
            continue
        basis = np.array(vectors).T
        entries.append(BlockEntry(seq, prob, basis @ basis.conj().T,
                                  rank=len(vectors)))
    if not entries:
        raise ValidationError(
            "typical region is empty for these (n, delta); enlarge delta or n")
    return BlockStructure(spec, tuple(entries), dim_total)


def typical_mass(tki: TripartiteKI, spec: TypicalSpec,
                 max_sequences: int = DEFAULT_SEQUENCE_CAP) -> float:
    """Weight of the projected n-copy state, computed combinatorially."""
    pick = strongly_typical_set if spec.mode == "strong" else weakly_typical_set
    seqs = pick(_renormalize(tki.base.probs), spec.n, spec.delta, max_sequences)
    bases = _per_block_bases(tki)
    total = 0.0
    for seq, prob in seqs:
        counts: dict[int, int] = {}
        for j in seq:
            counts[j] = counts.get(j, 0) + 1
        cond = 1.0
        for j, m in counts.items():
            spectrum = bases[j][0][:tki.blocks[j].dim_r]
            cond *= sum(w for _, w in _weak_window(spectrum, m, spec.delta))
        total += prob * cond
    return float(total)


def protocol_layout(tki: TripartiteKI, n: int) -> SystemLayout:
    """Grouped n-copy layout; factors of dimension one are dropped."""
    d_a0, d_al, d_ar = tki.base.dims
    d_b0, d_bl, d_br = tki.b_dims
    d_c = tki.base.c_layout.dim
    groups = [("a0", d_a0), ("aL", d_al), ("aR", d_ar),
              ("b0", d_b0), ("bL", d_bl), ("bR", d_br), ("C", d_c)]
    factors = []
    for name, dim in groups:
        if dim == 1:
            continue
        factors.extend((f"{name}.{i+1}", dim) for i in range(n))
    return SystemLayout(factors)


def _group_labels(lay: SystemLayout, names: tuple[str, ...]) -> list[str]:
    return [l for l in lay.labels if l.split(".")[0] in names]


def a_side_labels(lay: SystemLayout) -> list[str]:
    return _group_labels(lay, ("a0", "aL", "aR"))


def b_side_labels(lay: SystemLayout) -> list[str]:
    return _group_labels(lay, ("b0", "bL", "bR"))


def c_side_labels(lay: SystemLayout) -> list[str]:
    return _group_labels(lay, ("C",))


def _ki_power(tki: TripartiteKI, n: int, dim_cap: int) -> PureVec:
    """n-fold tensor power of the decomposed state on the grouped layout."""
    single = tki.ki_pure_state()
    total = single.layout.dim ** n
    if total > dim_cap:
        need = total * total * 16 / 2**20
        raise DimensionError(
            f"dense simulation needs dimension {total} > cap {dim_cap} "
            f"(a density matrix would take ~{need:.0f} MiB)")
    vec = np.ones(1, dtype=np.complex128)
    for _ in range(n):
        vec = np.kron(vec, single.vec)
    factors = []
    for i in range(n):
        factors.extend((f"{name}.{i+1}", dim)
                       for name, dim in single.layout.factors if dim > 1)
    psi = PureVec(SystemLayout(factors), vec)
    return permute_vec(psi, protocol_layout(tki, n).labels)


def build_protocol_state(tki: TripartiteKI, spec: TypicalSpec,
                         dim_cap: int = DEFAULT_DIM_CAP,
                         max_sequences: int = DEFAULT_SEQUENCE_CAP,
                         ) -> tuple[PureVec, BlockStructure, float]:
    """Project the n-copy state onto the typical region.

    Returns the (subnormalized) projected vector on the grouped layout,
    the block structure, and the captured weight (its squared norm).
    """
    blocks = build_blocks(tki, spec, max_sequences)
    psi_n = _ki_power(tki, spec.n, dim_cap)
    projected = _apply_blockwise(psi_n, tki, spec.n,
                                 {e.seq: e.projector for e in blocks.entries})
    d = float(np.real(np.vdot(projected, projected)))
    if d <= 1e-15:
        raise ValidationError("projected state has vanishing weight")
    return PureVec(psi_n.layout, projected, normalized=False), blocks, d


def _apply_blockwise(psi: PureVec, tki: TripartiteKI, n: int,
                     per_seq: dict[tuple[int, ...], np.ndarray],
                     default_identity: bool = False) -> np.ndarray:
    """Apply one matrix per classical block sequence to the quantum factor
    of a grouped vector.  Sequences absent from the map get zero (or the
    identity when ``default_identity``)."""
    d_a0, _, d_ar = tki.base.dims
    lay = psi.layout
    da0n = d_a0 ** n
    darn = d_ar ** n
    al = _group_labels(lay, ("aL",))
    daln = lay.dim_of(al) if al else 1
    tens = psi.vec.reshape(da0n, daln, darn, -1)
    out = np.zeros_like(tens)
    for flat in range(da0n):
        seq = _unflatten(flat, d_a0, n)
        m = per_seq.get(seq)
        if m is None:
            if default_identity:
                out[flat] = tens[flat]
            continue
        out[flat] = np.einsum("pq,lqr->lpr", m, tens[flat])
    return out.reshape(-1)


def _unflatten(flat: int, base: int, n: int) -> tuple[int, ...]:
    seq = []
    for _ in range(n):
        seq.append(flat % base)
        flat //= base
    return tuple(reversed(seq))


def sample_block_unitary(blocks: BlockStructure, tki: TripartiteKI,
                         rng: np.random.Generator,
                         ) -> dict[tuple[int, ...], np.ndarray]:
    """One random block unitary: per typical sequence, Haar on the typical
    quantum subspace and identity on its complement.

    Returned as a map from block sequence to the unitary on the n-fold
    quantum factor; non-typical sequences act as the identity.
    """
    d_ar = tki.base.dims[2]
    darn = d_ar ** blocks.spec.n
    out = {}
    for entry in blocks.entries:
        if darn == 1:
            out[entry.seq] = np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
            continue
        vals, vecs = np.linalg.eigh(entry.projector)
        cols = vecs[:, vals > 0.5]
        u = haar_unitary(cols.shape[1], rng)
        out[entry.seq] = (cols @ u @ cols.conj().T
                          + np.eye(darn) - entry.projector)
    return out


def average_markov_state(tki: TripartiteKI, spec: TypicalSpec,
                         dim_cap: int = DEFAULT_DIM_CAP,
                         max_sequences: int = DEFAULT_SEQUENCE_CAP,
                         blocks: BlockStructure | None = None) -> DensityOp:
    """Exact ensemble average of the randomized protocol output.

    A subnormalized Markov state conditioned on the B side: the mixture
    over typical block sequences of copied classical indices, the
    redundant purifications, the maximally mixed typical quantum factor,
    and the complementary marginal of the projected block state.
    """
    if blocks is None:
        blocks = build_blocks(tki, spec, max_sequences)
    lay = protocol_layout(tki, spec.n)
    if lay.dim > dim_cap:
        raise DimensionError(f"dimension {lay.dim} exceeds cap {dim_cap}")
    n = spec.n
    d_a0, d_al, d_ar = tki.base.dims
    d_b0, d_bl, d_br = tki.b_dims
    d_c = tki.base.c_layout.dim
    darn = d_ar ** n

    om_vecs = [om.vec.reshape(blk.dim_l, -1) for (om, _), blk
               in zip(tki.purified_blocks, tki.blocks)]
    ph_vecs = [ph.vec.reshape(blk.dim_r, -1, d_c) for (_, ph), blk
               in zip(tki.purified_blocks, tki.blocks)]

    # assembly order of the kron below; permuted onto the grouped layout
    order = [f"a0.{i+1}" for i in range(n)] + [f"b0.{i+1}" for i in range(n)]
    for i in range(n):
        order += [f"aL.{i+1}", f"bL.{i+1}"]
    order += [f"aR.{i+1}" for i in range(n)]
    order += [f"bR.{i+1}" for i in range(n)] + [f"C.{i+1}" for i in range(n)]
    present = set(lay.labels)
    order = [l for l in order if l in present]
    by_label = dict(lay.factors)
    src_layout = SystemLayout([(l, by_label[l]) for l in order])

    total = np.zeros((lay.dim, lay.dim), dtype=np.complex128)
    for entry in blocks.entries:
        class_vec = np.ones(1, dtype=np.complex128)
        if d_a0 > 1:
            for _ in range(2):  # once for the a side, once for the b side
                for j in entry.seq:
                    e = np.zeros(d_a0)
                    e[j] = 1.0
                    class_vec = np.kron(class_vec, e)
        om_vec = np.ones(1, dtype=np.complex128)
        if d_al * d_bl > 1:
            for j in entry.seq:
                blk = tki.blocks[j]
                padded = np.zeros((d_al, d_bl), dtype=np.complex128)
                padded[:blk.dim_l, :om_vecs[j].shape[1]] = om_vecs[j]
                om_vec = np.kron(om_vec, padded.reshape(-1))
        pure_vec = np.kron(class_vec, om_vec)
        pure_part = np.outer(pure_vec, pure_vec.conj())

        pi = entry.projector / entry.rank

        ph_vec = np.ones(1, dtype=np.complex128)
        for j in entry.seq:
            blk = tki.blocks[j]
            padded = np.zeros((d_ar, d_br, d_c), dtype=np.complex128)
            padded[:blk.dim_r, :ph_vecs[j].shape[1], :] = ph_vecs[j]
            ph_vec = np.kron(ph_vec, padded.reshape(-1))
        phi_tens = ph_vec.reshape([d_ar, d_br, d_c] * n)
        perm = ([3 * i for i in range(n)] + [3 * i + 1 for i in range(n)]
                + [3 * i + 2 for i in range(n)])
        phi_grouped = np.transpose(phi_tens, perm).reshape(darn, -1)
        projected = entry.projector @ phi_grouped
        phi_prime = projected.T @ projected.conj()

        term = np.kron(np.kron(pure_part, pi), phi_prime)
        total += entry.prob * permute_mat(term, src_layout, lay.labels)
    return DensityOp(lay, total, trace_of_one=False)


def min_nonzero_eigenvalue(mat: np.ndarray, rtol: float = 1e-12) -> float:
    vals = np.linalg.eigvalsh((mat + mat.conj().T) / 2)
    top = float(vals[-1])
    return float(np.min(vals[vals > top * rtol]))


def min_eig_lower_bound(tki: TripartiteKI, n: int, delta: float, d_a: int) -> float:
    """Closed-form lower bound on the smallest nonzero eigenvalue of the
    averaged Markov state."""
    probs = tki.base.probs
    h = shannon(probs)
    h_prime = -float(np.mean(np.log2(probs[probs > 0])))
    s_sum = sum(blk.p * vn_entropy(partial_trace(blk.phi, ["aR"]))
                for blk in tki.blocks)
    exponent = n * (h + 2 * s_sum + delta * (h_prime + 2 * np.log2(4 * d_a)))
    return float(2.0 ** (-exponent))


def simulate(psi: PureVec, n: int, delta: float, rate: float, trials: int,
             seed: int | None = None,
             a: Sequence[str] = ("A",), b: Sequence[str] = ("B",),
             c: Sequence[str] = ("C",), dim_cap: int = DEFAULT_DIM_CAP,
             rng: np.random.Generator | None = None,
             tki: TripartiteKI | None = None) -> SimResult:
    """Run the finite-sample protocol and measure convergence.

    Draws ceil(2^(n*rate)) block unitaries per trial; err_to_average
    compares the sample average of the projected state against the exact
    ensemble average, err_full compares the randomized full n-copy state
    against the normalized Markov target.  Both are trace distances
    between normalized states, averaged over trials.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    from .kidec import ki_tripartite

    if tki is None:
        tki = ki_tripartite(psi, a, b, c)
    spec = TypicalSpec(n, delta)
    psi_prime, blocks, d_mass = build_protocol_state(tki, spec, dim_cap)
    bar = average_markov_state(tki, spec, dim_cap, blocks=blocks)
    bar_norm = bar.mat / d_mass
    psi_full = _ki_power(tki, n, dim_cap)
    n_unitaries = math.ceil(2.0 ** (n * rate))

    err_avg_trials, err_full_trials = [], []
    for _ in range(trials):
        acc = np.zeros((psi_prime.dim, psi_prime.dim), dtype=np.complex128)
        acc_full = np.zeros_like(acc)
        for _ in range(n_unitaries):
            v = sample_block_unitary(blocks, tki, rng)
            w = _apply_blockwise(psi_prime, tki, n, v)
            acc += np.outer(w, w.conj())
            wf = _apply_blockwise(psi_full, tki, n, v, default_identity=True)
            acc_full += np.outer(wf, wf.conj())
        acc /= n_unitaries
        acc_full /= n_unitaries
        err_avg_trials.append(trace_norm(acc / d_mass - bar_norm))
        err_full_trials.append(trace_norm(acc_full - bar_norm))

    err_avg = float(np.mean(err_avg_trials))
    err_full = float(np.mean(err_full_trials))
    lam_min = min_nonzero_eigenvalue(bar.mat)
    d_a = psi.layout.dim_of(a)
    eps1 = max(err_avg / 2.0, 1e-300)
    chernoff = 2.0 * np.log(2.0 * float(d_a) ** (3 * n)) / (lam_min * eps1 ** 2)
    return SimResult(n, delta, rate, n_unitaries, err_avg, err_full,
                     d_mass, float(np.ceil(chernoff)), seed)
