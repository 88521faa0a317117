"""Dense complex linear algebra over labeled tensor-product spaces.

Index convention used throughout the package: the leftmost factor of a
layout is the most significant index, matching ``np.kron(a, b)`` where
``a`` carries the major index.  A basis state ``|i1, i2, ..., ik>`` of a
layout with dims ``(d1, ..., dk)`` sits at flat index
``i1*d2*...*dk + i2*d3*...*dk + ... + ik``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Hermiticity / PSD tolerance: double-precision eigensolver noise floor
# with headroom.
HERM_TOL = 1e-9
# Relative rank cutoff for generalized inverses.
RANK_RTOL = 1e-10
# Eigenvalues below this are dropped before taking logs.
LOG_EPS = 1e-12


class DimensionError(ValueError):
    """Shape or layout mismatch between operands."""


class LabelError(KeyError):
    """Unknown or duplicated factor label."""


class ValidationError(ValueError):
    """An object violates its defining numerical invariant."""


@dataclass(frozen=True)
class SystemLayout:
    """Ordered list of labeled tensor factors with dimensions."""

    factors: tuple[tuple[str, int], ...]

    def __init__(self, factors: Iterable[tuple[str, int]]):
        object.__setattr__(self, "factors", tuple((str(l), int(d)) for l, d in factors))
        labels = [l for l, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate labels in layout: {labels}")
        for l, d in self.factors:
            if d < 1:
                raise DimensionError(f"factor {l!r} has dimension {d} < 1")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        out = 1
        for _, d in self.factors:
            out *= d
        return out

    def dim_of(self, labels: Iterable[str]) -> int:
        wanted = set(labels)
        self._check_known(wanted)
        out = 1
        for l, d in self.factors:
            if l in wanted:
                out *= d
        return out

    def axes_of(self, labels: Iterable[str]) -> tuple[int, ...]:
        wanted = set(labels)
        self._check_known(wanted)
        return tuple(i for i, (l, _) in enumerate(self.factors) if l in wanted)

    def restrict(self, labels: Iterable[str]) -> "SystemLayout":
        """Sub-layout of the given labels, preserving the original order."""
        wanted = set(labels)
        self._check_known(wanted)
        return SystemLayout([(l, d) for l, d in self.factors if l in wanted])

    def reorder(self, labels: Sequence[str]) -> "SystemLayout":
        if set(labels) != set(self.labels) or len(labels) != len(self.factors):
            raise LabelError(f"reorder {labels} does not match layout {self.labels}")
        by_label = dict(self.factors)
        return SystemLayout([(l, by_label[l]) for l in labels])

    def _check_known(self, wanted: set[str]) -> None:
        unknown = wanted - set(self.labels)
        if unknown:
            raise LabelError(f"unknown labels {sorted(unknown)}; layout has {self.labels}")

    def __add__(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.factors + other.factors)


def layout(*factors: tuple[str, int]) -> SystemLayout:
    """Shorthand constructor: ``layout(("A", 2), ("B", 3))``."""
    return SystemLayout(factors)


def _as_complex(m) -> np.ndarray:
    return np.asarray(m, dtype=np.complex128)


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = _as_complex(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


@dataclass(frozen=True)
class DensityOp:
    """Complex PSD unit-trace matrix over a SystemLayout.

    ``trace_of_one=False`` admits subnormalized operators (still Hermitian
    PSD); a few protocol-level objects are deliberately subnormalized.
    """

    layout: SystemLayout
    mat: np.ndarray = field(repr=False)
    trace_of_one: bool = True

    def __init__(self, layout: SystemLayout, mat, trace_of_one: bool = True,
                 tol: float = HERM_TOL):
        mat = _as_complex(mat)
        d = layout.dim
        if mat.shape != (d, d):
            raise DimensionError(f"matrix shape {mat.shape} != layout dim {d}")
        if np.max(np.abs(mat - mat.conj().T)) > tol:
            raise ValidationError("density operator is not Hermitian within tolerance")
        lo = float(np.min(np.linalg.eigvalsh((mat + mat.conj().T) / 2)))
        if lo < -max(tol, tol * max(1.0, abs(np.trace(mat).real))):
            raise ValidationError(f"density operator has negative eigenvalue {lo}")
        if trace_of_one and abs(np.trace(mat) - 1.0) > 1e-6:
            raise ValidationError(f"trace {np.trace(mat)} != 1")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "trace_of_one", bool(trace_of_one))

    @property
    def dim(self) -> int:
        return self.layout.dim

    def trace(self) -> float:
        return float(np.trace(self.mat).real)


@dataclass(frozen=True)
class PureVec:
    """Unit-norm complex vector over a SystemLayout.

    ``normalized=False`` admits subnormalized vectors (projected states).
    """

    layout: SystemLayout
    vec: np.ndarray = field(repr=False)
    normalized: bool = True

    def __init__(self, layout: SystemLayout, vec, normalized: bool = True):
        vec = _as_complex(vec).reshape(-1)
        if vec.shape != (layout.dim,):
            raise DimensionError(f"vector length {vec.shape[0]} != layout dim {layout.dim}")
        if normalized and abs(np.linalg.norm(vec) - 1.0) > 1e-6:
            raise ValidationError(f"norm {np.linalg.norm(vec)} != 1")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "vec", vec)
        object.__setattr__(self, "normalized", bool(normalized))

    @property
    def dim(self) -> int:
        return self.layout.dim

    def density(self) -> DensityOp:
        return DensityOp(self.layout, np.outer(self.vec, self.vec.conj()),
                         trace_of_one=self.normalized)


@dataclass(frozen=True)
class IsometryOp:
    """Linear isometry between labeled spaces: mat† mat = identity on source."""

    source_layout: SystemLayout
    target_layout: SystemLayout
    mat: np.ndarray = field(repr=False)

    def __init__(self, source_layout: SystemLayout, target_layout: SystemLayout,
                 mat, tol: float = HERM_TOL):
        mat = _as_complex(mat)
        if mat.shape != (target_layout.dim, source_layout.dim):
            raise DimensionError(
                f"isometry shape {mat.shape} != ({target_layout.dim}, {source_layout.dim})")
        gram = mat.conj().T @ mat
        if np.max(np.abs(gram - np.eye(source_layout.dim))) > max(tol, 1e-8):
            raise ValidationError("mat† mat != identity on source within tolerance")
        object.__setattr__(self, "source_layout", source_layout)
        object.__setattr__(self, "target_layout", target_layout)
        object.__setattr__(self, "mat", mat)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a``'s indices major."""
    return np.kron(_as_complex(a), _as_complex(b))


def tensor_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = _as_complex(mats[0])
    for m in mats[1:]:
        out = np.kron(out, _as_complex(m))
    return out


def _nontrivial(dims: Sequence[int]) -> list[int]:
    """Axes with dim > 1; dim-1 factors do not affect memory layout."""
    return [i for i, d in enumerate(dims) if d > 1]


def permute_vec(psi: PureVec, order: Sequence[str]) -> PureVec:
    """Reorder the tensor factors of a pure vector."""
    new_layout = psi.layout.reorder(order)
    dims = psi.layout.dims
    keep = _nontrivial(dims)
    pos = {psi.layout.labels[i]: k for k, i in enumerate(keep)}
    perm = [pos[l] for l in order if l in pos]
    v = psi.vec.reshape([dims[i] for i in keep]) if keep else psi.vec
    v = np.transpose(v, perm) if keep else v
    return PureVec(new_layout, v.reshape(-1), normalized=psi.normalized)


def permute_mat(mat: np.ndarray, layout_: SystemLayout, order: Sequence[str],
                ) -> np.ndarray:
    """Reorder the tensor factors of a raw square matrix over a layout."""
    dims = layout_.dims
    keep = _nontrivial(dims)
    pos = {layout_.labels[i]: k for k, i in enumerate(keep)}
    perm = [pos[l] for l in order if l in pos]
    if not keep:
        return mat
    n = len(perm)
    kept_dims = [dims[i] for i in keep]
    m = mat.reshape(kept_dims + kept_dims)
    m = np.transpose(m, perm + [p + n for p in perm])
    d = layout_.dim
    return m.reshape(d, d)


def permute_op(op: DensityOp, order: Sequence[str]) -> DensityOp:
    """Reorder the tensor factors of a density operator."""
    new_layout = op.layout.reorder(order)
    m = permute_mat(op.mat, op.layout, order)
    return DensityOp(new_layout, m, trace_of_one=op.trace_of_one)


def partial_trace(op: DensityOp, keep: Iterable[str]) -> DensityOp:
    """Reduced operator on the kept factors, preserving their order."""
    keep_set = set(keep)
    op.layout._check_known(keep_set)
    labels = op.layout.labels
    dims = op.layout.dims
    new_layout = op.layout.restrict(keep_set)
    nt = _nontrivial(dims)
    if not nt:
        return DensityOp(new_layout, op.mat.copy(), trace_of_one=op.trace_of_one)
    kept_nt = [i for i in nt if labels[i] in keep_set]
    dropped_nt = [i for i in nt if labels[i] not in keep_set]
    pos = {i: k for k, i in enumerate(nt)}
    perm = [pos[i] for i in kept_nt] + [pos[i] for i in dropped_nt]
    nn = len(nt)
    m = op.mat.reshape([dims[i] for i in nt] * 2)
    m = np.transpose(m, perm + [p + nn for p in perm])
    k = int(np.prod([dims[i] for i in kept_nt])) if kept_nt else 1
    d = int(np.prod([dims[i] for i in dropped_nt])) if dropped_nt else 1
    out = np.einsum("iaja->ij", m.reshape(k, d, k, d))
    return DensityOp(new_layout, out, trace_of_one=op.trace_of_one)


def marginal(psi: PureVec, keep: Iterable[str]) -> DensityOp:
    """Reduced density operator of a pure state on the kept factors."""
    return partial_trace(psi.density(), keep)


def eigh(m: np.ndarray, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with eigenvalues sorted descending."""
    m = _as_complex(m)
    if not is_hermitian(m, tol=max(tol, tol * max(1.0, float(np.max(np.abs(m)))))):
        raise ValidationError("matrix is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def psd_sqrt(m: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    """Hermitian PSD square root; errors on eigenvalues below -tol.

    Eigenvalues within the eigensolver noise floor of zero are zeroed
    before the root: the square root would otherwise amplify O(eps)
    noise on exact kernel directions to O(sqrt(eps)).
    """
    vals, vecs = eigh(m, tol=tol)
    scale = max(1.0, float(vals[0])) if len(vals) else 1.0
    if len(vals) and vals[-1] < -tol * scale:
        raise ValidationError(f"matrix is not PSD: min eigenvalue {vals[-1]}")
    vals = np.clip(vals, 0.0, None)
    if len(vals):
        vals[vals < vals[0] * 1e-14] = 0.0
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def pinv_sqrt(m: np.ndarray, rank_rtol: float = RANK_RTOL) -> np.ndarray:
    """Inverse square root on the support, zero on the kernel."""
    vals, vecs = eigh(m)
    vals = np.clip(vals, 0.0, None)
    cutoff = (vals[0] if len(vals) else 0.0) * rank_rtol
    inv = np.where(vals > cutoff, 1.0 / np.sqrt(np.where(vals > cutoff, vals, 1.0)), 0.0)
    return (vecs * inv) @ vecs.conj().T


def pinv_psd(m: np.ndarray, rank_rtol: float = RANK_RTOL) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian PSD matrix via its spectrum."""
    vals, vecs = eigh(m)
    vals = np.clip(vals, 0.0, None)
    cutoff = (vals[0] if len(vals) else 0.0) * rank_rtol
    inv = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, vals, 1.0), 0.0)
    return (vecs * inv) @ vecs.conj().T


def support_basis(m: np.ndarray, rank_rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal column basis of the support of a Hermitian PSD matrix."""
    vals, vecs = eigh(m)
    cutoff = (vals[0] if len(vals) else 0.0) * rank_rtol
    r = int(np.sum(vals > cutoff))
    return vecs[:, :r]


def purify(rho: DensityOp, ref_label: str = "R") -> PureVec:
    """Pure state on layout ⊗ reference whose reference-trace equals rho.

    The reference dimension is the numerical rank of rho, so a pure input
    purifies to itself tensored with a single reference basis vector.
    """
    vals, vecs = eigh(rho.mat)
    cutoff = max(vals[0] * RANK_RTOL, LOG_EPS) if len(vals) else 0.0
    r = max(1, int(np.sum(vals > cutoff)))
    label = ref_label
    while label in rho.layout.labels:
        label += "'"
    d = rho.dim
    out = np.zeros(d * r, dtype=np.complex128)
    for i in range(r):
        amp = np.sqrt(max(vals[i], 0.0))
        out += amp * np.kron(vecs[:, i], _basis_vec(r, i))
    new_layout = rho.layout + SystemLayout([(label, r)])
    return PureVec(new_layout, out)


def _basis_vec(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[i] = 1.0
    return v


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix.

    The R-diagonal phase correction makes the distribution exactly Haar.
    """
    if d < 1:
        raise DimensionError(f"dimension {d} < 1")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def random_pure(layout_: SystemLayout, rng: np.random.Generator) -> PureVec:
    """Haar-random pure state on a layout."""
    d = layout_.dim
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureVec(layout_, z / np.linalg.norm(z))


def random_density(layout_: SystemLayout, rng: np.random.Generator,
                   rank: int | None = None) -> DensityOp:
    """Random mixed state: partial trace of a Haar-random purification."""
    d = layout_.dim
    r = rank or d
    z = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = z @ z.conj().T
    return DensityOp(layout_, m / np.trace(m).real)


def apply_matrix(psi: PureVec, m: np.ndarray, labels: Sequence[str],
                 out_factors: Sequence[tuple[str, int]] | None = None,
                 unitary: bool = False) -> PureVec:
    """Apply a matrix to the given factors of a pure vector.

    The matrix acts on the subspace spanned by ``labels`` (in layout
    order); all other factors are untouched.  ``out_factors`` replaces the
    acted-on factors when the matrix is rectangular.  The result is marked
    unnormalized unless ``unitary`` is set.
    """
    sub = [l for l in psi.layout.labels if l in set(labels)]
    rest = [l for l in psi.layout.labels if l not in set(labels)]
    moved = permute_vec(psi, sub + rest)
    d_sub = psi.layout.dim_of(sub)
    d_rest = psi.layout.dim // d_sub
    block = moved.vec.reshape(d_sub, d_rest)
    out = _as_complex(m) @ block
    norm_flag = psi.normalized and unitary
    if out_factors is None:
        res = PureVec(moved.layout, out.reshape(-1), normalized=norm_flag)
        return permute_vec(res, psi.layout.labels)
    out_layout = SystemLayout(tuple(out_factors)) + psi.layout.restrict(rest)
    return PureVec(out_layout, out.reshape(-1), normalized=norm_flag)
