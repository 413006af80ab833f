"""Dense complex Hermitian linear algebra.

Eigendecomposition with eigenvalue clustering, spectral projectors, kernel
detection, reduced resolvents and positive-semidefiniteness checks.  All
types are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, HermiticityError, PositivityError
from .tolerances import (
    HERM_TOL,
    PROJ_TOL,
    RECON_TOL,
    TRACE_TOL,
    default_cluster_tol,
    resolve,
)

MatrixLike = Union[np.ndarray, Sequence[Sequence[complex]]]


def _frozen(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class HermitianOperator:
    """A complex square matrix with certified Hermiticity.

    Use :meth:`from_matrix` to build one from raw data: the constructor
    symmetrizes ``(M + M^dag)/2`` and rejects inputs whose anti-Hermitian
    part exceeds ``herm_tol`` relative to the Frobenius norm.
    """

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, matrix: MatrixLike, herm_tol: float = HERM_TOL) -> "HermitianOperator":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        sym = (m + m.conj().T) / 2.0
        residual = np.linalg.norm(m - sym)
        scale = max(1.0, np.linalg.norm(sym))
        if residual > herm_tol * scale:
            raise HermiticityError(
                f"matrix is not Hermitian: residual {residual:.3e} exceeds "
                f"{herm_tol:.1e} * |H|_F"
            )
        return cls(_frozen(sym))

    @classmethod
    def zero(cls, dim: int) -> "HermitianOperator":
        return cls(_frozen(np.zeros((dim, dim))))

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def fro_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian operator certified to be a quantum state.

    Trace must equal 1 within ``trace_tol`` and the minimum eigenvalue must
    not fall below ``-psd_tol``.  Negative round-off eigenvalues are kept in
    the matrix and clamped to zero only on spectral read-out.
    """

    op: HermitianOperator

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @classmethod
    def from_matrix(
        cls,
        matrix: MatrixLike,
        herm_tol: float = HERM_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float | None = None,
    ) -> "DensityMatrix":
        psd_tol = resolve(psd_tol, "PSD_TOL")
        op = HermitianOperator.from_matrix(matrix, herm_tol=herm_tol)
        tr = op.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1 beyond {trace_tol:.1e}")
        min_eig = float(np.linalg.eigvalsh(op.matrix)[0])
        if min_eig < -psd_tol:
            raise PositivityError(
                f"density matrix has eigenvalue {min_eig:.3e} below -{psd_tol:.1e}"
            )
        return cls(op)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(HermitianOperator(_frozen(np.eye(dim) / dim)))

    @classmethod
    def pure(cls, amplitudes: Sequence[complex]) -> "DensityMatrix":
        """State |psi><psi| from a (normalized) amplitude vector."""
        v = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("cannot normalize a zero vector")
        v = v / norm
        return cls(HermitianOperator(_frozen(np.outer(v, v.conj()))))

    def eigenvalues_clamped(self, psd_tol: float | None = None) -> np.ndarray:
        """Ascending eigenvalues with round-off negatives clamped to zero."""
        psd_tol = resolve(psd_tol, "PSD_TOL")
        w = np.linalg.eigvalsh(self.matrix)
        if w[0] < -psd_tol:
            raise PositivityError(f"eigenvalue {w[0]:.3e} below -{psd_tol:.1e}")
        return np.clip(w, 0.0, None)


@dataclass(frozen=True)
class Projector:
    """An orthogonal projector together with its rank."""

    op: HermitianOperator
    rank: int

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @classmethod
    def build(cls, matrix: np.ndarray, proj_tol: float = PROJ_TOL) -> "Projector":
        op = HermitianOperator.from_matrix(matrix)
        m = op.matrix
        if np.linalg.norm(m @ m - m) > proj_tol:
            raise ValueError("matrix is not idempotent within tolerance")
        tr = op.trace()
        rank = int(round(tr))
        if abs(tr - rank) > proj_tol:
            raise ValueError(f"projector trace {tr!r} is not near an integer")
        return cls(op, rank)

    @classmethod
    def zero(cls, dim: int) -> "Projector":
        return cls(HermitianOperator.zero(dim), 0)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct (clustered) eigenvalues with their orthogonal projectors.

    ``eigenvalues`` are descending cluster values, ``projectors[i]`` projects
    onto the span of all eigenvectors merged into cluster ``i`` and
    ``multiplicities[i]`` counts them.  Clustering is by transitive closure:
    raw eigenvalues whose chain of mutual gaps stays within ``cluster_tol``
    merge into one cluster whose value is the mean of its members.
    """

    eigenvalues: tuple[float, ...]
    projectors: tuple[HermitianOperator, ...]
    multiplicities: tuple[int, ...]
    cluster_tol: float
    dim: int = field(default=0)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def kernel_indices(self, kernel_tol: float | None = None) -> tuple[int, ...]:
        kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
        return tuple(i for i, v in enumerate(self.eigenvalues) if abs(v) <= kernel_tol)

    def is_full_rank(self, kernel_tol: float | None = None) -> bool:
        return not self.kernel_indices(kernel_tol)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for value, proj in zip(self.eigenvalues, self.projectors):
            out += value * proj.matrix
        return out


def _as_matrix(H: Union[HermitianOperator, DensityMatrix, MatrixLike]) -> np.ndarray:
    if isinstance(H, HermitianOperator):
        return H.matrix
    if isinstance(H, DensityMatrix):
        return H.matrix
    return HermitianOperator.from_matrix(H).matrix


def spectral_decompose(
    H: Union[HermitianOperator, DensityMatrix, MatrixLike],
    cluster_tol: float | None = None,
    proj_tol: float = PROJ_TOL,
    recon_tol: float = RECON_TOL,
) -> SpectralDecomposition:
    """Eigendecompose ``H`` and merge near-degenerate eigenvalues.

    Raw eigenvalues are sorted and chained: consecutive gaps at most
    ``cluster_tol`` merge into a single cluster (transitive closure, so the
    grouping is order-independent).  The cluster value is the mean of the
    merged raw eigenvalues.  Clusters are returned in descending order.

    Raises if the eigensolver fails or the spectral data does not
    reconstruct ``H`` within ``recon_tol`` (relative to its norm).
    """
    m = _as_matrix(H)
    dim = m.shape[0]
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(float(np.linalg.norm(m)))
    if cluster_tol <= 0:
        raise ValueError("cluster_tol must be positive")

    try:
        w, V = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise np.linalg.LinAlgError(f"eigendecomposition failed: {exc}") from exc

    groups: list[list[int]] = [[0]]
    for i in range(1, dim):
        if w[i] - w[groups[-1][-1]] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])

    values: list[float] = []
    projectors: list[HermitianOperator] = []
    multiplicities: list[int] = []
    spread = 0.0
    for group in reversed(groups):
        mean = float(np.mean(w[group]))
        values.append(mean)
        spread = max(spread, float(np.abs(w[group] - mean).max()))
        block = V[:, group]
        proj = block @ block.conj().T
        projectors.append(HermitianOperator(_frozen((proj + proj.conj().T) / 2.0)))
        multiplicities.append(len(group))

    decomp = SpectralDecomposition(
        eigenvalues=tuple(values),
        projectors=tuple(projectors),
        multiplicities=tuple(multiplicities),
        cluster_tol=cluster_tol,
        dim=dim,
    )

    total = sum(p.matrix for p in decomp.projectors)
    if np.linalg.norm(total - np.eye(dim)) > proj_tol:
        raise ValueError("spectral projectors do not sum to the identity")
    # merged clusters legitimately shift eigenvalues by up to their spread
    scale = max(1.0, float(np.linalg.norm(m)))
    allowed = recon_tol * scale + spread * np.sqrt(dim)
    if np.linalg.norm(decomp.reconstruct() - m) > allowed:
        raise ValueError("spectral data does not reconstruct the operator")
    return decomp


def kernel_projector(
    decomp: SpectralDecomposition,
    kernel_tol: float | None = None,
) -> Projector:
    """Projector onto the kernel of the decomposed operator.

    Sums the projectors of all clusters with ``|value| <= kernel_tol``.
    A full-rank operator yields the rank-0 zero projector.  A cluster value
    below ``-kernel_tol`` signals a non-PSD source and raises.
    """
    kernel_tol = resolve(kernel_tol, "KERNEL_TOL")
    negative = [v for v in decomp.eigenvalues if v < -kernel_tol]
    if negative:
        raise PositivityError(
            f"operator has negative eigenvalue {min(negative):.3e}; kernel is undefined"
        )
    idx = decomp.kernel_indices(kernel_tol)
    if not idx:
        return Projector.zero(decomp.dim)
    total = sum(decomp.projectors[i].matrix for i in idx)
    rank = sum(decomp.multiplicities[i] for i in idx)
    return Projector(HermitianOperator(_frozen(total)), rank)


def reduced_resolvent(decomp: SpectralDecomposition, target_index: int) -> HermitianOperator:
    """Sum of ``(lambda_j - lambda_i)^-1 P_j`` over clusters ``j != i``.

    The result ``S`` satisfies ``S P_i = P_i S = 0`` and inverts
    ``H - lambda_i`` on the orthogonal complement of cluster ``i``.  A
    single-cluster decomposition returns the zero operator (empty sum).
    """
    n = len(decomp)
    if not 0 <= target_index < n:
        raise IndexError(f"target_index {target_index} out of range for {n} clusters")
    out = np.zeros((decomp.dim, decomp.dim), dtype=complex)
    target = decomp.eigenvalues[target_index]
    for j in range(n):
        if j == target_index:
            continue
        out += decomp.projectors[j].matrix / (decomp.eigenvalues[j] - target)
    return HermitianOperator(_frozen(out))


def psd_min_eig(H: Union[HermitianOperator, DensityMatrix, MatrixLike]) -> float:
    """Smallest eigenvalue of a Hermitian operator."""
    return float(np.linalg.eigvalsh(_as_matrix(H))[0])
