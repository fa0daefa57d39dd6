"""Dense density-matrix algebra for bipartite qudit systems.

Matrices are plain ``numpy`` complex arrays. :class:`DensityMatrix` wraps one
together with its subsystem dimensions and checks physicality on construction.
All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
ZERO_EIGENVALUE = 1e-12

_SUBSYSTEMS = ("A", "B")


class InvalidStateError(ValueError):
    """Raised when a matrix violates a density-matrix invariant."""


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains NaN or Inf entries")
    return arr


def _check_selector(keep: str) -> int:
    if keep not in _SUBSYSTEMS:
        raise ValueError(f"subsystem selector must be 'A' or 'B', got {keep!r}")
    return _SUBSYSTEMS.index(keep)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator on C^dA ⊗ C^dB.

    The stored array is a read-only copy, so instances are safe to share.
    """

    matrix: np.ndarray
    dims: tuple[int, int] = (3, 3)
    _eigvals: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mat = _as_matrix(self.matrix).copy()
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 2 or min(dims) < 1:
            raise ValueError(f"dims must be a pair of positive ints, got {self.dims}")
        n = dims[0] * dims[1]
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"matrix is not Hermitian (deviation {herm:.3g})")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        evals = np.linalg.eigvalsh(mat)
        if evals[0] < -PSD_TOL:
            raise InvalidStateError(f"matrix has negative eigenvalue {evals[0]:.3g}")
        mat.setflags(write=False)
        evals.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "_eigvals", evals)

    @classmethod
    def from_matrix(cls, m, dims=(3, 3)) -> "DensityMatrix":
        """Build from a matrix that is Hermitian up to roundoff.

        The input is symmetrised as (m + m†)/2 before validation; trace and
        positivity are still checked, not repaired.
        """
        arr = _as_matrix(m)
        return cls(0.5 * (arr + arr.conj().T), dims)

    @classmethod
    def from_pure(cls, state: "PureState | np.ndarray", dims=None) -> "DensityMatrix":
        vec = state.amplitudes if isinstance(state, PureState) else np.asarray(state, complex)
        if dims is None:
            dims = state.dims if isinstance(state, PureState) else (len(vec), 1)
        return cls.from_matrix(np.outer(vec, vec.conj()), dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigvals

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        vec = np.asarray(self.amplitudes, dtype=complex).ravel().copy()
        if not np.all(np.isfinite(vec)):
            raise ValueError("amplitudes contain NaN or Inf")
        norm = np.vdot(vec, vec).real
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm² is {norm!r}, expected 1")
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)
        if self.dims is None:
            object.__setattr__(self, "dims", (len(vec), 1))

    @property
    def dim(self) -> int:
        return len(self.amplitudes)


def basis_projector(index: int, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[index, index] = 1.0
    return out


def tensor(a, b) -> np.ndarray:
    """Kronecker product a ⊗ b."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def tensor_states(rho_a: DensityMatrix, rho_b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix.from_matrix(
        tensor(rho_a.matrix, rho_b.matrix), (rho_a.dim, rho_b.dim)
    )


def _as_4index(rho: DensityMatrix) -> np.ndarray:
    da, db = rho.dims
    return rho.matrix.reshape(da, db, da, db)


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Reduced state of subsystem ``keep`` ('A' or 'B')."""
    which = _check_selector(keep)
    t = _as_4index(rho)
    if which == 0:
        red = np.einsum("ijkj->ik", t)
    else:
        red = np.einsum("ijil->jl", t)
    d = red.shape[0]
    return DensityMatrix.from_matrix(red, (d, 1))


def partial_transpose(rho: DensityMatrix, on: str = "B") -> np.ndarray:
    """Transpose on one tensor factor.

    Returns a raw Hermitian matrix, since the result need not be positive.
    """
    which = _check_selector(on)
    da, db = rho.dims
    t = _as_4index(rho)
    t = t.transpose(2, 1, 0, 3) if which == 0 else t.transpose(0, 3, 2, 1)
    return t.reshape(da * db, da * db).copy()


def clipped_eigenvalues(rho: DensityMatrix) -> np.ndarray:
    """Eigenvalues with roundoff negatives (>= -PSD_TOL) and values below
    ``ZERO_EIGENVALUE`` set to exactly zero."""
    ev = np.array(rho.eigenvalues, dtype=float)
    ev[ev < ZERO_EIGENVALUE] = 0.0
    return ev


def shannon_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > ZERO_EIGENVALUE]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return shannon_entropy(clipped_eigenvalues(rho))


def trace_norm(m) -> float:
    """Sum of singular values of a square matrix.

    Hermitian input goes through ``eigvalsh``; anything else uses an SVD.
    """
    arr = _as_matrix(m)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"trace norm needs a square matrix, got {arr.shape}")
    if np.allclose(arr, arr.conj().T, atol=HERMITIAN_TOL, rtol=0):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T)))))
    return float(np.sum(np.linalg.svd(arr, compute_uv=False)))


def _psd_sqrt(rho: DensityMatrix) -> np.ndarray:
    w, v = np.linalg.eigh(rho.matrix)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr √(√ρ σ √ρ))², in [0, 1].

    Computed as the squared nuclear norm of √ρ√σ, which avoids square roots
    of roundoff-sized eigenvalues for rank-deficient states.
    """
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    sv = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(sigma), compute_uv=False)
    f = float(np.sum(sv) ** 2)
    return min(max(f, 0.0), 1.0)


def maximally_mixed(d: int, dims=None) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=complex) / d, dims or (d, 1))
