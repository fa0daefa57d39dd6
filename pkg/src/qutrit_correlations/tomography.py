"""Photoluminescence readout, linear-inversion tomography and MLE.

The readout model assigns a PL rate to each of the nine eigenstates. A state
is probed by applying a selective pulse sequence and recording the
population-weighted PL rate. Three record kinds exist:

* ``normalization`` (10 values): sequences on the optically pumped state,
  used to recover the electron polarization and the nine PL rates;
* ``state-measurement`` (15 values): sequences on the prepared state, from
  which the nine populations and the coherences rho_15, rho_59, rho_19 are
  obtained by solving a linear system;
* ``nuclear-polarization`` (4 values): the nuclear polarization readout.

Linear inversion can return unphysical matrices, so the final state is
fitted with a 12-parameter factorisation sigma = T^T T / tr(T^T T).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .nv import (
    Axis,
    NvConfig,
    PulseSpec,
    apply_pulses,
    half_pi_pulse,
    initial_state,
    pi_pulse,
    sequence_unitary,
)
from .qudit import DensityMatrix, fidelity

log = logging.getLogger(__name__)

RECORD_LENGTHS = {"normalization": 10, "state-measurement": 15, "nuclear-polarization": 4}

# (row, col) of the three measured coherences, 0-based
COHERENCES = ((0, 4), (4, 8), (0, 8))
ELEMENT_NAMES = tuple(f"rho{k}{k}" for k in range(1, 10)) + (
    "mu1", "nu1", "mu2", "nu2", "mu3", "nu3",
)

MLE_EPS = 1e-6
SIGMA_FLOOR = 1e-9
TIE_DECIMALS = 12


class NormalizationError(ArithmeticError):
    """The normalization system produced an unphysical solution."""


# --- data types ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PLModel:
    rates: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float).ravel().copy()
        if r.shape != (9,):
            raise ValueError(f"need nine PL rates, got {r.size}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("PL rates must be finite and non-negative")
        if np.ptp(r) == 0:
            raise ValueError("PL rates are all equal; readout cannot distinguish levels")
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    def composite(self) -> dict[str, float]:
        """Rate combinations that appear in the coherence rows."""
        L = self.rates
        return {
            "L11": (L[3] + L[4]) / 2,
            "L12": (L[3] + L[5]) / 2,
            "L13": L[4] - L[3],
            "L14": L[3] - L[5],
        }

    def to_dict(self) -> dict:
        return {"rates": [float(x) for x in self.rates]}

    @classmethod
    def from_dict(cls, d: dict) -> "PLModel":
        return cls(d["rates"])


# m_S = 0 brightest, nuclear dependence irregular. Chosen so that the
# normalization system has a single root for every p_e in [0.5, 1].
DEFAULT_PL_RATES = (0.82, 0.70, 0.75, 1.00, 0.88, 0.94, 0.65, 0.78, 0.60)


def default_pl_model() -> PLModel:
    return PLModel(DEFAULT_PL_RATES)


def ramp_pl_model(low: float = 0.6, high: float = 1.0) -> PLModel:
    """Evenly spaced rates with the m_S = 0 levels brightest.

    Brightness order: |0,+1>, |0,0>, |0,-1>, then the m_S = +1 and m_S = -1
    levels. With the default ends the normalization system has a second
    exact root at p_e = 7/9.
    """
    order = [4, 5, 6, 1, 2, 3, 7, 8, 9]
    ramp = np.linspace(high, low, 9)
    rates = np.empty(9)
    rates[np.array(order) - 1] = ramp
    return PLModel(rates)


@dataclass(frozen=True, eq=False)
class PLRecord:
    values: np.ndarray
    sigmas: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in RECORD_LENGTHS:
            raise ValueError(f"unknown record kind {self.kind!r}")
        n = RECORD_LENGTHS[self.kind]
        v = np.asarray(self.values, dtype=float).ravel().copy()
        s = np.broadcast_to(np.asarray(self.sigmas, dtype=float), v.shape).copy()
        if v.size != n:
            raise ValueError(f"{self.kind} record needs {n} values, got {v.size}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(s))):
            raise ValueError("record contains non-finite entries")
        if np.any(s <= 0):
            raise ValueError("record sigmas must be positive")
        v.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sigmas", s)

    def perturbed(self, rng: np.random.Generator) -> "PLRecord":
        return PLRecord(self.values + rng.normal(0.0, self.sigmas), self.sigmas, self.kind)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "values": [float(x) for x in self.values],
            "sigmas": [float(x) for x in self.sigmas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PLRecord":
        return cls(d["values"], d["sigmas"], d["kind"])


@dataclass(frozen=True, eq=False)
class RawStateEstimate:
    """Linear-inversion estimate; may be unphysical."""

    populations: np.ndarray
    offdiag: np.ndarray
    sigmas: np.ndarray = field(default_factory=lambda: np.full(15, np.nan))

    def __post_init__(self):
        pops = np.asarray(self.populations, dtype=float).ravel()
        off = np.asarray(self.offdiag, dtype=complex).ravel()
        sig = np.asarray(self.sigmas, dtype=float).ravel()
        if pops.shape != (9,) or off.shape != (3,) or sig.shape != (15,):
            raise ValueError("expected 9 populations, 3 coherences and 15 sigmas")
        if not (np.all(np.isfinite(pops)) and np.all(np.isfinite(off))):
            raise ValueError("raw estimate contains non-finite entries")
        object.__setattr__(self, "populations", pops)
        object.__setattr__(self, "offdiag", off)
        object.__setattr__(self, "sigmas", sig)

    def vector(self) -> np.ndarray:
        """(rho11..rho99, mu1, nu1, mu2, nu2, mu3, nu3)."""
        off = np.column_stack([self.offdiag.real, self.offdiag.imag]).ravel()
        return np.concatenate([self.populations, off])

    @classmethod
    def from_vector(cls, x, sigmas=None) -> "RawStateEstimate":
        x = np.asarray(x, dtype=float)
        off = x[9::2] + 1j * x[10::2]
        return cls(x[:9], off, np.full(15, np.nan) if sigmas is None else sigmas)

    @classmethod
    def from_state(cls, rho: DensityMatrix) -> "RawStateEstimate":
        m = rho.matrix
        return cls(np.real(np.diag(m)), [m[i, j] for i, j in COHERENCES])

    def matrix(self) -> np.ndarray:
        """Hermitian matrix holding only the measured elements."""
        m = np.diag(self.populations).astype(complex)
        for (i, j), z in zip(COHERENCES, self.offdiag):
            m[i, j] = z
            m[j, i] = np.conj(z)
        return m


@dataclass(frozen=True)
class MLEParams:
    k: np.ndarray
    objective: float = math.nan
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class NormalizationResult:
    p_e: float
    model: PLModel
    residual: float
    # other p_e roots that fit the record within Delta chi^2 <= 1
    alternatives: tuple[float, ...] = ()


@dataclass
class MonteCarloSummary:
    states: list[DensityMatrix]
    raws: list[RawStateEstimate]
    mean: DensityMatrix
    std_real: np.ndarray
    std_imag: np.ndarray
    unconverged: int = 0

    @property
    def size(self) -> int:
        return len(self.states)


# --- readout ----------------------------------------------------------------------

def expected_pl(rho: DensityMatrix, model: PLModel) -> float:
    return float(np.real(np.diag(rho.matrix)) @ model.rates)


def _pulse_list(spec) -> tuple[PulseSpec, ...]:
    out = []
    for m, n, kind, axis in spec:
        make = pi_pulse if kind == "pi" else half_pi_pulse
        out.append(make(m, n, Axis(axis)))
    return tuple(out)


NORMALIZATION_SEQUENCES: tuple[tuple[PulseSpec, ...], ...] = tuple(
    _pulse_list(s)
    for s in (
        [],
        [(4, 5, "pi", "X"), (5, 6, "pi", "X")],
        [(1, 4, "pi", "X")],
        [(4, 5, "pi", "X"), (5, 6, "pi", "X"), (3, 6, "pi", "X")],
        [(4, 7, "pi", "X")],
        [(4, 5, "pi", "X"), (5, 6, "pi", "X"), (6, 9, "pi", "X")],
        [(4, 5, "pi", "X")],
        [(4, 5, "pi", "X"), (2, 5, "pi", "X")],
        [(4, 5, "pi", "X"), (5, 8, "pi", "X")],
        [(7, 8, "pi", "X")],
    )
)

MEASUREMENT_SEQUENCES: tuple[tuple[PulseSpec, ...], ...] = tuple(
    _pulse_list(s)
    for s in (
        [],
        [(5, 6, "pi", "X"), (4, 5, "pi", "X")],
        [(1, 4, "pi", "X")],
        [(3, 6, "pi", "X"), (5, 6, "pi", "X"), (4, 5, "pi", "X")],
        [(4, 7, "pi", "X")],
        [(6, 9, "pi", "X"), (5, 6, "pi", "X"), (4, 5, "pi", "X")],
        [(4, 5, "pi", "X")],
        [(2, 5, "pi", "X"), (4, 5, "pi", "X")],
        [(5, 8, "pi", "X"), (4, 5, "pi", "X")],
        # coherence rows: move the pair onto a common transition, then pi/2
        [(1, 4, "pi", "Y"), (4, 5, "half", "Y")],
        [(1, 4, "pi", "X"), (4, 5, "half", "Y")],
        [(6, 9, "pi", "Y"), (5, 6, "half", "Y"), (4, 5, "pi", "X")],
        [(6, 9, "pi", "X"), (5, 6, "half", "Y"), (4, 5, "pi", "X")],
        [(6, 9, "pi", "X"), (5, 6, "pi", "X"), (1, 4, "pi", "X"), (4, 5, "half", "X")],
        [(6, 9, "pi", "X"), (5, 6, "pi", "X"), (1, 4, "pi", "X"), (5, 4, "half", "Y")],
    )
)


def _population_response(sequences, probes: Sequence[np.ndarray]) -> np.ndarray:
    """Final populations for each (sequence, probe) pair, shape (S, P, 9).

    Probes are Hermitian (not necessarily positive) matrices; the pulse maps
    are linear, so responses to probes combine linearly.
    """
    out = np.empty((len(sequences), len(probes), 9))
    for s, seq in enumerate(sequences):
        u = sequence_unitary(seq)
        for k, probe in enumerate(probes):
            out[s, k] = np.real(np.diag(u @ probe @ u.conj().T))
    return out


def _element_probes() -> list[np.ndarray]:
    probes = []
    for k in range(9):
        m = np.zeros((9, 9), dtype=complex)
        m[k, k] = 1
        probes.append(m)
    for i, j in COHERENCES:
        for z in (1.0, 1j):
            m = np.zeros((9, 9), dtype=complex)
            m[i, j] = z
            m[j, i] = np.conj(z)
            probes.append(m)
    return probes


_MEASUREMENT_RESPONSE = _population_response(MEASUREMENT_SEQUENCES, _element_probes())


def _normalization_response() -> tuple[np.ndarray, np.ndarray]:
    """Populations per sequence for the m_S=0 part and for the m_S=+-1 part."""
    e0 = np.zeros((9, 9), dtype=complex)
    e0[3, 3] = 1
    lam = np.zeros((9, 9), dtype=complex)
    lam[0, 0] = lam[6, 6] = 1
    resp = _population_response(NORMALIZATION_SEQUENCES, [e0, lam])
    return resp[:, 0], resp[:, 1]


_NORM_PE, _NORM_LAMBDA = _normalization_response()


def normalization_matrix(p_e: float) -> np.ndarray:
    """10x9 coefficients of the PL rates in the normalization records."""
    return p_e * _NORM_PE + (1 - p_e) / 2 * _NORM_LAMBDA


def measurement_matrix(model: PLModel) -> np.ndarray:
    """15x15 map from (populations, mu, nu) to the state-measurement record."""
    return _MEASUREMENT_RESPONSE @ model.rates


def _record(values, sigma, kind, noise_seed) -> PLRecord:
    values = np.asarray(values, dtype=float)
    sigmas = np.broadcast_to(np.asarray(sigma, dtype=float), values.shape)
    if noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        values = values + rng.normal(0.0, sigmas)
    return PLRecord(values, sigmas, kind)


def simulate_normalization(
    cfg: NvConfig, model: PLModel, sigma=1e-3, noise_seed: int | None = None
) -> PLRecord:
    """N_1..N_10 for the pumped state of ``cfg``; noisy only if seeded."""
    rho_i = initial_state(cfg)
    vals = [expected_pl(apply_pulses(rho_i, seq), model) for seq in NORMALIZATION_SEQUENCES]
    return _record(vals, sigma, "normalization", noise_seed)


def solve_normalization(rec: PLRecord, grid_step: float = 1e-3) -> NormalizationResult:
    """Recover (p_e, PL rates) from a normalization record.

    The system is linear in the rates for fixed p_e, so p_e is scanned on a
    grid with a weighted least-squares solve at each point. Every local
    minimum of that profile seeds a joint bounded least-squares refinement.
    Ten records fix ten unknowns, so the profile can have several roots; the
    best fit is returned and the others that fit equally well within noise
    are listed in ``alternatives``. Roots with negative rates are discarded;
    exact ties go to the larger p_e.
    """
    if rec.kind != "normalization":
        raise ValueError(f"expected a normalization record, got {rec.kind}")
    w = 1.0 / rec.sigmas
    b = rec.values * w

    def fit_rates(pe):
        a = normalization_matrix(pe) * w[:, None]
        rates, *_ = np.linalg.lstsq(a, b, rcond=None)
        return rates, float(np.sum((a @ rates - b) ** 2))

    def resid(x):
        return (normalization_matrix(x[0]) @ x[1:] - rec.values) * w

    def jac(x):
        pe, rates = x[0], x[1:]
        d_pe = (_NORM_PE - 0.5 * _NORM_LAMBDA) @ rates
        return np.column_stack([d_pe, normalization_matrix(pe)]) * w[:, None]

    grid = np.linspace(0.0, 1.0, int(round(1 / grid_step)) + 1)
    costs = np.array([fit_rates(pe)[1] for pe in grid])
    padded = np.r_[np.inf, costs, np.inf]
    minima = np.flatnonzero((costs <= padded[:-2]) & (costs <= padded[2:]))

    lo = np.r_[0.0, np.full(9, -np.inf)]
    hi = np.r_[1.0, np.full(9, np.inf)]
    fits = []
    for i in minima:
        pe0 = float(grid[i])
        rates0, chi0 = fit_rates(pe0)
        sol = least_squares(resid, np.r_[pe0, rates0], jac=jac, bounds=(lo, hi),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        chi = float(np.sum(sol.fun**2))
        if chi <= chi0:
            fits.append((chi, float(sol.x[0]), sol.x[1:]))
        else:
            # refinement should never be worse than the grid
            fits.append((chi0, pe0, rates0))
    fits.sort(key=lambda f: (round(f[0], TIE_DECIMALS), -f[1]))
    valid = [f for f in fits if np.all(f[2] >= 0)]
    if not valid:
        _, pe, rates = fits[0]
        raise NormalizationError(
            f"normalization gave negative PL rates {np.round(rates, 6).tolist()} at p_e={pe:.6f}"
        )
    chi, pe, rates = valid[0]
    alternatives = tuple(
        f[1] for f in valid[1:] if f[0] <= chi + 1.0 and abs(f[1] - pe) > grid_step
    )
    if alternatives:
        log.warning("p_e is ambiguous: %.4f fits best, but %s fit within noise",
                    pe, ", ".join(f"{a:.4f}" for a in alternatives))
    return NormalizationResult(p_e=pe, model=PLModel(rates), residual=float(np.sqrt(chi)),
                               alternatives=alternatives)


def simulate_measurement(
    rho: DensityMatrix, model: PLModel, sigma=1e-3, noise_seed: int | None = None
) -> PLRecord:
    """E_1..E_15 for state ``rho``; noisy only if seeded."""
    vals = [expected_pl(apply_pulses(rho, seq), model) for seq in MEASUREMENT_SEQUENCES]
    return _record(vals, sigma, "state-measurement", noise_seed)


def solve_elements(rec: PLRecord, model: PLModel) -> RawStateEstimate:
    """Invert the 15x15 measurement system with linear error propagation."""
    if rec.kind != "state-measurement":
        raise ValueError(f"expected a state-measurement record, got {rec.kind}")
    a = measurement_matrix(model)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError(f"measurement matrix is singular (cond={cond:.3g})")
    inv = np.linalg.inv(a)
    x = inv @ rec.values
    sig = np.sqrt((inv**2) @ (rec.sigmas**2))
    return RawStateEstimate.from_vector(x, sig)


# --- maximum likelihood -------------------------------------------------------------

_T_DIAG = np.arange(9)
# k10..k12 positions in T (row, col), 0-based
_T_OFF = ((4, 0), (8, 0), (8, 4))


def t_matrix(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    t = np.zeros((9, 9))
    t[_T_DIAG, _T_DIAG] = k[:9]
    for (i, j), v in zip(_T_OFF, k[9:]):
        t[i, j] = v
    return t


def state_from_params(k) -> np.ndarray:
    """T^T T / tr(T^T T) as a real symmetric matrix."""
    t = t_matrix(k)
    g = t.T @ t
    return g / np.trace(g)


def _element_vector(m: np.ndarray) -> np.ndarray:
    out = np.empty(15)
    out[:9] = np.real(np.diag(m))
    for n, (i, j) in enumerate(COHERENCES):
        out[9 + 2 * n] = np.real(m[i, j])
        out[10 + 2 * n] = np.imag(m[i, j])
    return out


def _initial_params(raw: RawStateEstimate) -> np.ndarray:
    """Start point from the clipped, PSD-projected raw estimate."""
    m = np.real(raw.matrix())
    d = np.clip(np.diag(m), 0.0, None)
    if d.sum() <= 0:
        d = np.ones(9)
    scale = d.sum()
    np.fill_diagonal(m, d)
    m /= scale
    idx = [0, 4, 8]
    block = m[np.ix_(idx, idx)]
    w, v = np.linalg.eigh(block)
    block = (v * np.clip(w, 0.0, None)) @ v.T + 1e-12 * np.eye(3)
    # block = T_b^T T_b with T_b lower triangular: reverse, Cholesky, reverse back
    rev = block[::-1, ::-1]
    c = np.linalg.cholesky(rev)
    tb = c[::-1, ::-1].T
    k = np.sqrt(np.clip(np.diag(m), 0.0, None))
    k[idx] = np.diag(tb)
    return np.r_[k, tb[1, 0], tb[2, 0], tb[2, 1]]


def mle_objective(k, target: np.ndarray, weighting: str = "estimate",
                  sigmas: np.ndarray | None = None, eps: float = MLE_EPS) -> float:
    """Sum over measured elements of (sigma_e - rho_e)^2 / (2 w_e).

    ``weighting="estimate"`` uses w_e = max(|sigma_e|, eps) with sigma_e the
    model element; ``"variance"`` uses the squared measurement uncertainty.
    """
    model = _element_vector(state_from_params(k))
    diff = model - target
    if weighting == "estimate":
        denom = np.maximum(np.abs(model), eps)
    elif weighting == "variance":
        denom = np.maximum(sigmas, SIGMA_FLOOR) ** 2
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return float(np.sum(diff * diff / (2 * denom)))


def mle_reconstruct(
    raw: RawStateEstimate,
    weighting: str = "estimate",
    max_iterations: int = 20000,
    eps: float = MLE_EPS,
) -> tuple[DensityMatrix, MLEParams]:
    """Fit the physical state closest to ``raw`` under the 12-parameter ansatz.

    The result is positive semidefinite with unit trace by construction.
    Non-convergence is reported through ``MLEParams.converged``; the best
    state found is still returned.
    """
    target = raw.vector()
    sigmas = raw.sigmas if weighting == "variance" else None
    if weighting == "variance" and not np.all(np.isfinite(raw.sigmas)):
        raise ValueError("variance weighting needs finite element sigmas")
    x0 = _initial_params(raw)

    def f(k):
        if not np.any(k):
            return np.inf
        return mle_objective(k, target, weighting, sigmas, eps)

    step = 1e-2 * max(np.max(np.abs(x0)), 1e-3)
    simplex = np.vstack([x0, x0 + step * np.eye(12)])
    res = minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxiter": max_iterations,
            "maxfev": 2 * max_iterations,
            "xatol": 1e-12,
            "fatol": 1e-16,
            "adaptive": True,
        },
    )
    k = res.x if res.fun <= f(x0) else x0
    if not res.success:
        log.warning("MLE did not converge: %s", res.message)
    state = DensityMatrix.from_matrix(state_from_params(k), (3, 3))
    # normalise k so that tr(T^T T) = 1
    k = k / np.sqrt(np.sum(k**2))
    return state, MLEParams(k=k, objective=float(f(k)), converged=bool(res.success),
                            iterations=int(res.nit))


# --- Monte Carlo ---------------------------------------------------------------------

def member_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Per-member seeds: SeedSequence(seed) spawned children 0..n-1."""
    return np.random.SeedSequence(seed).spawn(n)


def monte_carlo_reconstruct(
    rec: PLRecord,
    model: PLModel,
    M: int,
    seed: int,
    weighting: str = "estimate",
) -> MonteCarloSummary:
    """Reconstruct M Gaussian-perturbed copies of ``rec``.

    Member i draws its noise from the i-th child of ``SeedSequence(seed)``,
    so results do not depend on evaluation order.
    """
    if M < 1:
        raise ValueError("at least one Monte Carlo member is required")
    states, raws, bad = [], [], 0
    for ss in member_seeds(seed, M):
        rng = np.random.default_rng(ss)
        raw = solve_elements(rec.perturbed(rng), model)
        state, params = mle_reconstruct(raw, weighting=weighting)
        bad += not params.converged
        raws.append(raw)
        states.append(state)
    stack = np.array([s.matrix for s in states])
    mean = DensityMatrix.from_matrix(stack.mean(axis=0), (3, 3))
    ddof = 1 if M > 1 else 0
    return MonteCarloSummary(
        states=states,
        raws=raws,
        mean=mean,
        std_real=stack.real.std(axis=0, ddof=ddof),
        std_imag=stack.imag.std(axis=0, ddof=ddof),
        unconverged=bad,
    )


# --- p estimation --------------------------------------------------------------------

_INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6) -> float:
    """Maximiser of a unimodal f on [lo, hi], to within ``tol``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    # the maximum may sit on the boundary
    candidates = [(f(lo), lo), (f(x), x), (f(hi), hi)]
    return max(candidates, key=lambda t: (t[0], -t[1]))[1]


def estimate_p(
    sigma: DensityMatrix, simulator: Callable[[float], DensityMatrix], tol: float = 1e-6
) -> float:
    """p in [0, 1] maximising fidelity(sigma, simulator(p))."""
    return golden_section_max(lambda p: fidelity(sigma, simulator(p)), 0.0, 1.0, tol)


def estimate_p_ensemble(
    states: Sequence[DensityMatrix], simulator: Callable[[float], DensityMatrix], tol: float = 1e-6
) -> tuple[float, float, np.ndarray]:
    """Mean and standard deviation of the per-member p estimates."""
    ps = np.array([estimate_p(s, simulator, tol) for s in states])
    std = float(ps.std(ddof=1)) if len(ps) > 1 else 0.0
    return float(ps.mean()), std, ps


# --- nuclear polarization ------------------------------------------------------------

def nuclear_polarization_signals(p_e: float, p_n: float, rates) -> np.ndarray:
    """N_11..N_14 for polarizations (p_e, p_n) and level rates l_1..l_8."""
    l1, l2, _, l4, l5, _, l7, l8 = np.asarray(rates, dtype=float)[:8]
    lam = (1 - p_e) / 2
    q = 1 - p_n
    common = lam * p_n * l1 + lam * q * l2
    return np.array([
        common + p_e * p_n * l4 + p_e * q * l5 + lam * p_n * l7 + lam * q * l8,
        common + p_e * p_n * l4 + lam * q * l5 + lam * p_n * l7 + p_e * q * l8,
        common + lam * q * l4 + p_e * p_n * l5 + p_e * q * l7 + lam * p_n * l8,
        common + lam * q * l4 + lam * p_n * l5 + p_e * q * l7 + p_e * p_n * l8,
    ])


def simulate_nuclear_polarization(
    p_e: float, p_n: float, model: PLModel, sigma=1e-3, noise_seed: int | None = None
) -> PLRecord:
    return _record(nuclear_polarization_signals(p_e, p_n, model.rates), sigma,
                   "nuclear-polarization", noise_seed)


def nuclear_polarization(rec: PLRecord) -> float:
    """p_n = (N13 - N14) / (N11 - N12 + N13 - N14)."""
    if rec.kind != "nuclear-polarization":
        raise ValueError(f"expected a nuclear-polarization record, got {rec.kind}")
    n11, n12, n13, n14 = rec.values
    den = n11 - n12 + n13 - n14
    if abs(den) <= 1e-12 * max(1.0, float(np.max(np.abs(rec.values)))):
        raise ZeroDivisionError("nuclear polarization denominator vanishes")
    return float((n13 - n14) / den)


def noise_for_element_sigma(model: PLModel, target: float = 0.01) -> float:
    """Uniform record sigma giving a mean propagated element sigma of ``target``."""
    inv = np.linalg.inv(measurement_matrix(model))
    unit = np.sqrt(np.sum(inv**2, axis=1))
    return float(target / unit.mean())
