"""Two-qutrit NV-centre model: electron spin S=1 and 14N nuclear spin I=1.

Levels are labelled 1..9 in the order
|+1,+1>, |+1,0>, |+1,-1>, |0,+1>, |0,0>, |0,-1>, |-1,+1>, |-1,0>, |-1,-1>
(|m_S, m_I>), which is also the row order of every 9x9 matrix here.
Pulses are ideal selective two-level rotations; the only decoherence
modelled during preparation is free-evolution dephasing.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .qudit import DensityMatrix

M_S = np.array([1, 1, 1, 0, 0, 0, -1, -1, -1])
M_I = np.array([1, 0, -1, 1, 0, -1, 1, 0, -1])

# 500 G with gamma_e = 2.8025 MHz/G and gamma_n(14N) = 0.3077 kHz/G
_FIELD_GAUSS = 500.0
DEFAULT_OMEGA_E = 2.8025e6 * _FIELD_GAUSS
DEFAULT_OMEGA_N = -0.3077e3 * _FIELD_GAUSS


def level(m_s: int, m_i: int) -> int:
    """1-based label of |m_S, m_I>."""
    if m_s not in (-1, 0, 1) or m_i not in (-1, 0, 1):
        raise ValueError(f"invalid quantum numbers ({m_s}, {m_i})")
    return 3 * (1 - m_s) + (1 - m_i) + 1


@dataclass(frozen=True)
class NvConfig:
    """Physical constants (Hz, seconds) and polarizations of the NV model."""

    D: float = 2.87e9
    Q: float = -4.95e6
    A: float = -2.16e6
    omega_e: float = DEFAULT_OMEGA_E
    omega_n: float = DEFAULT_OMEGA_N
    rabi_mw: float = 0.2e6
    rabi_rf: float = 25e3
    T1e: float = 4e-3
    T2e_star: float = 18e-6
    T2n_star: float = math.inf
    p_e: float = 0.9
    p_n: float = 0.981
    t_wait: float = 90e-6
    dephasing: str = "gaussian"

    def __post_init__(self):
        for name in ("D", "Q", "A", "omega_e", "omega_n", "rabi_mw", "rabi_rf"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("T1e", "T2e_star", "T2n_star"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.t_wait >= 0:
            raise ValueError("t_wait must be non-negative")
        for name in ("p_e", "p_n"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.dephasing not in ("gaussian", "exponential"):
            raise ValueError(f"unknown dephasing law {self.dephasing!r}")

    def ideal(self) -> "NvConfig":
        """Same constants with perfect electron and nuclear polarization."""
        return replace(self, p_e=1.0, p_n=1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(self.T2n_star):
            d["T2n_star"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NvConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown NvConfig fields: {sorted(unknown)}")
        d = dict(d)
        if d.get("T2n_star", 0) is None:
            d["T2n_star"] = math.inf
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "NvConfig":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data.get("nv", data))


class Axis(str, Enum):
    X = "X"
    Y = "Y"

    @property
    def phase(self) -> float:
        return 0.0 if self is Axis.X else math.pi / 2


class Channel(str, Enum):
    MW = "MW"
    RF = "RF"


@dataclass(frozen=True)
class PulseSpec:
    """Selective rotation on the two-level subspace {|m>, |n>} (1-based labels).

    |m> is the first basis vector of the subspace, which fixes the sign of
    the sigma_y generator.
    """

    transition: tuple[int, int]
    angle: float
    axis: Axis = Axis.X
    channel: Channel | None = None

    def __post_init__(self):
        m, n = self.transition
        if not (1 <= m <= 9 and 1 <= n <= 9) or m == n:
            raise ValueError(f"invalid transition {self.transition}")
        ds = abs(M_S[m - 1] - M_S[n - 1])
        di = abs(M_I[m - 1] - M_I[n - 1])
        if (ds, di) == (1, 0):
            implied = Channel.MW
        elif (ds, di) == (0, 1):
            implied = Channel.RF
        else:
            raise ValueError(f"transition {self.transition} is not a single ladder step")
        object.__setattr__(self, "axis", Axis(self.axis))
        if self.channel is None:
            object.__setattr__(self, "channel", implied)
        elif Channel(self.channel) is not implied:
            raise ValueError(f"transition {self.transition} needs channel {implied.value}")
        else:
            object.__setattr__(self, "channel", Channel(self.channel))


def pi_pulse(m: int, n: int, axis: Axis = Axis.X) -> PulseSpec:
    return PulseSpec((m, n), math.pi, axis)


def half_pi_pulse(m: int, n: int, axis: Axis = Axis.X) -> PulseSpec:
    return PulseSpec((m, n), math.pi / 2, axis)


@dataclass(frozen=True)
class PrepStep:
    pulses: tuple[PulseSpec, ...]
    wait_after: float = 0.0

    def __post_init__(self):
        if not self.pulses and not self.wait_after > 0:
            raise ValueError("a preparation step needs pulses or a positive wait")


# --- Hamiltonian --------------------------------------------------------------

def hamiltonian(cfg: NvConfig) -> np.ndarray:
    """Diagonal 9x9 Hamiltonian in angular-frequency units (rad/s)."""
    e = (
        cfg.D * M_S**2
        + cfg.omega_e * M_S
        + cfg.Q * M_I**2
        + cfg.omega_n * M_I
        + cfg.A * M_S * M_I
    )
    return np.diag(2 * np.pi * e).astype(complex)


# label -> transition, pairs listed lower label first
TRANSITIONS = {
    "omega_e1": (4, 7),
    "omega_e2": (1, 4),
    "omega_e3": (5, 8),
    "omega_e4": (2, 5),
    "omega_e5": (6, 9),
    "omega_e6": (3, 6),
    "omega_n1": (4, 5),
    "omega_n2": (5, 6),
}


def transition_frequencies(cfg: NvConfig) -> dict[str, float]:
    """Absolute transition frequencies in Hz, keyed by label."""
    e = np.real(np.diag(hamiltonian(cfg))) / (2 * np.pi)
    return {k: float(abs(e[m - 1] - e[n - 1])) for k, (m, n) in TRANSITIONS.items()}


# --- pulses and channels ----------------------------------------------------------

def pulse_unitary(p: PulseSpec) -> np.ndarray:
    """exp(-i angle/2 (cos phi sx + sin phi sy)) on {|m>, |n>}, identity elsewhere."""
    m, n = (k - 1 for k in p.transition)
    c, s = math.cos(p.angle / 2), math.sin(p.angle / 2)
    phase = p.axis.phase
    u = np.eye(9, dtype=complex)
    u[m, m] = u[n, n] = c
    u[m, n] = -1j * s * np.exp(-1j * phase)
    u[n, m] = -1j * s * np.exp(1j * phase)
    return u


def sequence_unitary(pulses: Sequence[PulseSpec]) -> np.ndarray:
    u = np.eye(9, dtype=complex)
    for p in pulses:
        u = pulse_unitary(p) @ u
    return u


def apply_unitary(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    return DensityMatrix.from_matrix(u @ rho.matrix @ u.conj().T, rho.dims)


def apply_pulses(rho: DensityMatrix, pulses: Sequence[PulseSpec]) -> DensityMatrix:
    return apply_unitary(rho, sequence_unitary(pulses))


def _decay(t: float, T: float, law: str) -> float:
    if math.isinf(T):
        return 1.0
    x = t / T
    return math.exp(-x * x) if law == "gaussian" else math.exp(-x)


def dephasing_mask(t: float, cfg: NvConfig) -> np.ndarray:
    """Elementwise coherence factors after free evolution for time t.

    Electron and nuclear dephasing act independently, so elements that differ
    in both m_S and m_I pick up the product of the two factors.
    """
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    fe = _decay(t, cfg.T2e_star, cfg.dephasing)
    fn = _decay(t, cfg.T2n_star, cfg.dephasing)
    diff_s = M_S[:, None] != M_S[None, :]
    diff_i = M_I[:, None] != M_I[None, :]
    return np.where(diff_s, fe, 1.0) * np.where(diff_i, fn, 1.0)


def dephase(rho: DensityMatrix, t: float, cfg: NvConfig) -> DensityMatrix:
    return DensityMatrix.from_matrix(rho.matrix * dephasing_mask(t, cfg), rho.dims)


def diagonal_state(weights) -> DensityMatrix:
    w = np.asarray(weights, dtype=float)
    return DensityMatrix(np.diag(w).astype(complex), (3, 3))


def initial_state(cfg: NvConfig) -> DensityMatrix:
    """State after optical pumping.

    The electron is in m_S=0 with probability p_e and splits the rest evenly
    between m_S=+1 and m_S=-1. Each electron component carries m_I=+1 with
    probability p_n and leaks into m_I=0 otherwise.
    """
    lam = (1 - cfg.p_e) / 2
    w = np.zeros(9)
    for weight, m_s in ((lam, 1), (cfg.p_e, 0), (lam, -1)):
        w[level(m_s, 1) - 1] += weight * cfg.p_n
        w[level(m_s, 0) - 1] += weight * (1 - cfg.p_n)
    return diagonal_state(w)


# --- isotropic-state preparation ---------------------------------------------------

def _arc(x: float) -> float:
    return 2 * math.asin(math.sqrt(min(max(x, 0.0), 1.0)))


def preparation_steps(p: float, t_wait: float) -> list[PrepStep]:
    """The three pulse blocks that turn |0,+1> into the isotropic state."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    T = TRANSITIONS
    X, Y = Axis.X, Axis.Y
    step1 = PrepStep(
        (
            PulseSpec(T["omega_n1"], _arc((2 + p) / 3), X),
            PulseSpec(T["omega_n2"], _arc((1 - p) / (2 + p)), X),
            PulseSpec(T["omega_e2"], math.pi, X),
            PulseSpec(T["omega_e5"], math.pi, X),
        ),
        wait_after=t_wait,
    )
    step2 = PrepStep(
        (
            PulseSpec(T["omega_e2"], _arc(2 / 3), X),
            PulseSpec(T["omega_e1"], math.pi / 2, X),
            PulseSpec(T["omega_e4"], _arc((1 - p) / (3 + 6 * p)), X),
            PulseSpec(T["omega_e3"], _arc((1 - p) / (2 + 7 * p)), X),
            PulseSpec(T["omega_e5"], _arc(2 / 3), X),
            PulseSpec(T["omega_e6"], math.pi / 2, X),
        ),
        wait_after=t_wait,
    )
    step3 = PrepStep(
        (
            PulseSpec(T["omega_n1"], _arc(1 / 3), Y),
            PulseSpec(T["omega_n2"], math.pi / 2, Y),
            PulseSpec(T["omega_e2"], math.pi, Y),
            PulseSpec(T["omega_e5"], math.pi, Y),
        ),
    )
    return [step1, step2, step3]


def run_steps(rho: DensityMatrix, steps: Sequence[PrepStep], cfg: NvConfig) -> list[DensityMatrix]:
    """Apply each step in turn and return the state after every step."""
    out = []
    for step in steps:
        if step.pulses:
            rho = apply_pulses(rho, step.pulses)
        if step.wait_after > 0:
            rho = dephase(rho, step.wait_after, cfg)
        out.append(rho)
    return out


def prepare_isotropic(
    p: float, cfg: NvConfig | None = None, ideal: bool = True
) -> tuple[DensityMatrix, list[DensityMatrix]]:
    """Simulate the preparation sequence for parameter p.

    ``ideal=True`` starts from perfectly polarized |0,+1>; otherwise the
    polarizations in ``cfg`` are used. Returns the final state and the
    states after steps I, II and III.
    """
    cfg = cfg or NvConfig()
    start = initial_state(cfg.ideal() if ideal else cfg)
    states = run_steps(start, preparation_steps(p, cfg.t_wait), cfg)
    return states[-1], states


def prepare_with_nuclear_leakage(p: float, p_n: float = 0.981, cfg: NvConfig | None = None) -> DensityMatrix:
    """Isotropic preparation from a perfectly polarized electron but a
    nuclear spin of polarization ``p_n``."""
    cfg = replace(cfg or NvConfig(), p_e=1.0, p_n=p_n)
    return prepare_isotropic(p, cfg, ideal=False)[0]


def expected_step1(p: float) -> np.ndarray:
    """Diagonal state after step I for perfect dephasing."""
    return np.diag([(1 - p) / 3, 0, 0, 0, (1 + 2 * p) / 3, 0, 0, 0, (1 - p) / 3]).astype(complex)


def expected_step2(p: float) -> np.ndarray:
    """Diagonal state after step II for perfect dephasing."""
    d = np.full(9, (1 - p) / 9)
    d[4] = (1 + 8 * p) / 9
    return np.diag(d).astype(complex)
