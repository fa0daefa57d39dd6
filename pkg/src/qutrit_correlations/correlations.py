"""Mutual information, classical correlation, discord and negativity.

Classical correlation is maximised over rank-1 projective measurements on
subsystem B. For qutrits the measurement basis is parameterised by six
angles (alpha, beta, gamma, psi, theta, phi): the first three build an
orthonormal triple, the last three rotate it with spin-1 Euler rotations.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .qudit import (
    DensityMatrix,
    PureState,
    ZERO_EIGENVALUE,
    partial_trace,
    partial_transpose,
    trace_norm,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

LOG2_3 = float(np.log2(3.0))
DISCORD_CLAMP = 1e-9
NEGATIVITY_CLAMP = 1e-12
TIE_DECIMALS = 12

# spin-1 operators in the (|+1>, |0>, |-1>) basis
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]]) / np.sqrt(2)

PARAM_NAMES = ("alpha", "beta", "gamma", "psi", "theta", "phi")
PARAM_LOWER = np.array([0.0, 0.0, -np.pi / 2, 0.0, 0.0, 0.0])
PARAM_UPPER = np.array([np.pi, np.pi, np.pi / 2, 2 * np.pi, 2 * np.pi, 2 * np.pi])
# gamma's interval is open at -pi/2
_BOX_LOWER = PARAM_LOWER + np.array([0.0, 0.0, 1e-9, 0.0, 0.0, 0.0])


class ConvergenceError(RuntimeError):
    """The basis optimizer ran out of iterations before converging."""


@dataclass(frozen=True)
class BasisParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    psi: float = 0.0
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise ValueError("basis parameters must be finite")
        if not (0 <= self.alpha <= np.pi and 0 <= self.beta <= np.pi):
            raise ValueError("alpha and beta must lie in [0, pi]")
        if not (-np.pi / 2 < self.gamma <= np.pi / 2):
            raise ValueError("gamma must lie in (-pi/2, pi/2]")
        for name in ("psi", "theta", "phi"):
            if not 0 <= getattr(self, name) <= 2 * np.pi:
                raise ValueError(f"{name} must lie in [0, 2pi]")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, x) -> "BasisParams":
        """Clip a 6-vector into the parameter box."""
        x = np.clip(np.asarray(x, dtype=float), _BOX_LOWER, PARAM_UPPER)
        return cls(**dict(zip(PARAM_NAMES, map(float, x))))


@dataclass(frozen=True)
class MeasurementBasis:
    vectors: tuple[PureState, PureState, PureState]

    def __post_init__(self):
        gram = self.matrix().conj() @ self.matrix().T
        dev = np.max(np.abs(gram - np.eye(len(self.vectors))))
        if dev > 1e-10:
            raise ValueError(f"basis vectors are not orthonormal (deviation {dev:.3g})")

    def matrix(self) -> np.ndarray:
        """Rows are the basis vectors."""
        return np.array([v.amplitudes for v in self.vectors])


@dataclass(frozen=True)
class OptimizerConfig:
    coarse_grid_points_per_axis: int = 7
    refinement_restarts: int = 10
    convergence_tol: float = 1e-6
    max_iterations: int = 2000

    def __post_init__(self):
        for name in ("coarse_grid_points_per_axis", "refinement_restarts", "max_iterations"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")


@dataclass(frozen=True)
class CorrelationReport:
    mutual_information: float
    classical_correlation: float
    discord: float
    negativity: float
    optimizer_basis: BasisParams
    optimizer_evals: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["optimizer_basis"] = asdict(self.optimizer_basis)
        return d


# --- states -----------------------------------------------------------------

def max_entangled(d: int = 3) -> PureState:
    """(1/sqrt d) sum_k |k,k>."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    vec = np.zeros(d * d, dtype=complex)
    vec[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return PureState(vec, (d, d))


def make_isotropic(p: float) -> DensityMatrix:
    """Two-qutrit isotropic state (1-p)/9 I_9 + p |psi><psi|."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    psi = max_entangled(3).amplitudes
    mat = (1 - p) / 9 * np.eye(9, dtype=complex) + p * np.outer(psi, psi.conj())
    return DensityMatrix.from_matrix(mat, (3, 3))


# --- measurement bases --------------------------------------------------------

def _small_d(theta):
    """Spin-1 Wigner d-matrix exp(-i theta S_y), broadcast over theta."""
    c, s = np.cos(theta), np.sin(theta)
    r2 = np.sqrt(2.0)
    out = np.empty(np.shape(theta) + (3, 3))
    out[..., 0, 0] = (1 + c) / 2
    out[..., 0, 1] = -s / r2
    out[..., 0, 2] = (1 - c) / 2
    out[..., 1, 0] = s / r2
    out[..., 1, 1] = c
    out[..., 1, 2] = -s / r2
    out[..., 2, 0] = (1 - c) / 2
    out[..., 2, 1] = s / r2
    out[..., 2, 2] = (1 + c) / 2
    return out


def rotation(psi, theta, phi) -> np.ndarray:
    """R = exp(-i psi S_z) exp(-i theta S_y) exp(-i phi S_z); broadcasts."""
    m = np.array([1.0, 0.0, -1.0])
    left = np.exp(-1j * np.multiply.outer(psi, m))
    right = np.exp(-1j * np.multiply.outer(phi, m))
    return left[..., :, None] * _small_d(theta) * right[..., None, :]


def _basis_rows(params: np.ndarray) -> np.ndarray:
    """Basis vectors as rows, for params of shape (..., 6)."""
    alpha, beta, gamma, psi, theta, phi = np.moveaxis(np.asarray(params, float), -1, 0)
    phi0 = np.arctan(np.tan(gamma) * np.tan(np.pi / 4 - alpha))
    em, ep, eg = np.exp(-1j * phi0), np.exp(1j * phi0), np.exp(-1j * gamma)
    ca, sa, cb, sb = np.cos(alpha), np.sin(alpha), np.cos(beta), np.sin(beta)
    zero = np.zeros_like(ca)
    u = np.stack([em * ca, zero, ep * sa], axis=-1)
    v0 = np.stack([zero, eg, zero], axis=-1)
    w = np.stack([-em * sa, zero, ep * ca], axis=-1)
    b_plus = cb[..., None] * u - sb[..., None] * v0
    b_zero = sb[..., None] * u + cb[..., None] * v0
    rows = np.stack([b_plus, b_zero, w], axis=-2)
    rot = rotation(psi, theta, phi)
    # rotated vectors R|b>, kept as rows
    return np.einsum("...ij,...kj->...ki", rot, rows)


def basis_from_params(params: BasisParams) -> MeasurementBasis:
    rows = _basis_rows(params.as_array())
    return MeasurementBasis(tuple(PureState(r) for r in rows))


def computational_basis() -> MeasurementBasis:
    return basis_from_params(BasisParams())


# --- entropic quantities ------------------------------------------------------

def mutual_information(rho: DensityMatrix) -> float:
    return (
        von_neumann_entropy(partial_trace(rho, "A"))
        + von_neumann_entropy(partial_trace(rho, "B"))
        - von_neumann_entropy(rho)
    )


def _conditional_entropies(rho: DensityMatrix, rows: np.ndarray) -> np.ndarray:
    """sum_j q_j S(rho_A^j) for a batch of bases given as (..., 3, dB) rows."""
    da, db = rho.dims
    t = rho.matrix.reshape(da, db, da, db)
    # unnormalised post-measurement states of A: q_j rho_A^j
    blocks = np.einsum("...jb,abcd,...jd->...jac", rows.conj(), t, rows, optimize=True)
    blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))
    ev = np.linalg.eigvalsh(blocks)
    q = ev.sum(axis=-1)
    # q S(rho/q) = -sum ev log ev + q log q
    ev = np.where(ev > ZERO_EIGENVALUE, ev, 1.0)
    plogp = np.sum(ev * np.log2(ev), axis=-1)
    qlogq = np.where(q > ZERO_EIGENVALUE, q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    contrib = np.where(q > ZERO_EIGENVALUE, qlogq - plogp, 0.0)
    return np.clip(contrib, 0.0, None).sum(axis=-1)


def conditional_entropy(rho: DensityMatrix, basis: MeasurementBasis) -> float:
    """Average entropy of A after measuring B projectively in ``basis``."""
    rows = basis.matrix()
    if rows.shape[1] != rho.dims[1]:
        raise ValueError(
            f"basis dimension {rows.shape[1]} does not match subsystem B ({rho.dims[1]})"
        )
    return float(_conditional_entropies(rho, rows))


def _grid(points: int) -> np.ndarray:
    axes = []
    for lo, hi, name in zip(PARAM_LOWER, PARAM_UPPER, PARAM_NAMES):
        if name == "gamma":
            # half-open interval (-pi/2, pi/2]
            axes.append(lo + (hi - lo) * np.arange(1, points + 1) / points)
        else:
            axes.append(np.linspace(lo, hi, points))
    return np.array(list(itertools.product(*axes)))


def _top_indices(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest values; near-ties go to the lowest index.

    Grid rows are generated in lexicographic parameter order, so the lowest
    index is also the lexicographically smallest parameter vector.
    """
    keys = np.round(values, TIE_DECIMALS)
    order = np.lexsort((np.arange(len(values)), -keys))
    return order[:k]


def classical_correlation(
    rho: DensityMatrix, cfg: OptimizerConfig | None = None, chunk: int = 20000
) -> tuple[float, BasisParams, int]:
    """Maximise S(rho_A) - conditional_entropy over projective bases on B.

    A coarse uniform grid over the parameter box is scanned first, then the
    best ``cfg.refinement_restarts`` points are refined with Nelder-Mead.
    Returns (value, maximising params, number of function evaluations).
    """
    cfg = cfg or OptimizerConfig()
    if rho.dims != (3, 3):
        raise ValueError(f"basis optimisation is implemented for qutrit pairs, got {rho.dims}")
    s_a = von_neumann_entropy(partial_trace(rho, "A"))

    grid = _grid(cfg.coarse_grid_points_per_axis)
    cond = np.empty(len(grid))
    for start in range(0, len(grid), chunk):
        cond[start:start + chunk] = _conditional_entropies(
            rho, _basis_rows(grid[start:start + chunk])
        )
    evals = len(grid)
    starts = grid[_top_indices(-cond, cfg.refinement_restarts)]

    def objective(x):
        return float(_conditional_entropies(rho, _basis_rows(x)))

    best_x, best_f = starts[0], float(np.min(cond))
    converged_any = False
    for x0 in starts:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(_BOX_LOWER, PARAM_UPPER)),
            options={
                "maxiter": cfg.max_iterations,
                "maxfev": 4 * cfg.max_iterations,
                "xatol": np.inf,
                "fatol": cfg.convergence_tol * 1e-3,
                "adaptive": True,
            },
        )
        evals += res.nfev
        converged_any |= bool(res.success)
        if res.fun < best_f - 10.0 ** -TIE_DECIMALS:
            best_x, best_f = res.x, float(res.fun)
    if not converged_any:
        raise ConvergenceError(
            f"no refinement run converged within {cfg.max_iterations} iterations"
        )

    params = BasisParams.from_array(best_x)
    best_f = min(best_f, objective(params.as_array()))
    return s_a - best_f, params, evals


def negativity(rho: DensityMatrix) -> float:
    """(||rho^{T_B}||_1 - 1) / 2."""
    val = (trace_norm(partial_transpose(rho, "B")) - 1.0) / 2.0
    if val < -NEGATIVITY_CLAMP:
        raise ArithmeticError(f"negativity came out negative: {val:.3g}")
    # roundoff-sized values (either sign) are reported as exactly zero
    return 0.0 if val < NEGATIVITY_CLAMP else val


def quantum_discord(rho: DensityMatrix, cfg: OptimizerConfig | None = None) -> CorrelationReport:
    mi = mutual_information(rho)
    cc, params, evals = classical_correlation(rho, cfg)
    d = mi - cc
    if d < 0:
        if d < -DISCORD_CLAMP:
            raise ArithmeticError(f"discord came out negative: {d:.3g}")
        d = 0.0
        cc = mi
    return CorrelationReport(
        mutual_information=mi,
        classical_correlation=cc,
        discord=d,
        negativity=negativity(rho),
        optimizer_basis=params,
        optimizer_evals=evals,
    )
