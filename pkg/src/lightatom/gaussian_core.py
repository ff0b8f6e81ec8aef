"""Gaussian states of a few bosonic modes and the channels acting on them.

Conventions used everywhere in the package:

* quadratures ``X = (a + a^dag)/2`` and ``P = (a - a^dag)/(2i)``, so the
  vacuum covariance is ``I/4`` and ``[X, P] = i/2``;
* phase space vectors are ordered ``(X_1, P_1, ..., X_M, P_M)``;
* in the interferometer, mode 0 is the optical field and mode 1 the atomic
  spin wave.

A channel ``(X, Y, d)`` maps ``mean -> X mean + d`` and
``cov -> X cov X^T + Y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

VACUUM_VARIANCE = 0.25
SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-10

INPUT_KINDS = ("vacuum", "coherent", "squeezed_coherent")


class UndefinedLCCError(ValueError):
    """Raised when a correlation coefficient involves a zero-variance quadrature."""


def symplectic_form(mode_count: int) -> np.ndarray:
    """Block-diagonal ``[[0, 1], [-1, 0]]`` for ``mode_count`` modes."""
    return np.kron(np.eye(mode_count), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_finite(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2 or mean.size == 0:
            raise ValueError("mean must be a non-empty vector of even length")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov must have shape {(mean.size, mean.size)}, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state moments must be finite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(0.5 * (cov + cov.T)))

    @property
    def mode_count(self) -> int:
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, mode_count: int = 1) -> "GaussianState":
        n = 2 * mode_count
        return cls(np.zeros(n), VACUUM_VARIANCE * np.eye(n))

    def physicality_margin(self) -> float:
        """Smallest eigenvalue of ``cov + (i/4) Omega``; negative means unphysical."""
        omega = symplectic_form(self.mode_count)
        return float(np.linalg.eigvalsh(self.cov + 0.25j * omega).min())

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.physicality_margin() >= -tol


def product_state(*states: GaussianState) -> GaussianState:
    """Tensor product of independent Gaussian states, modes in argument order."""
    mean = np.concatenate([s.mean for s in states])
    n = mean.size
    cov = np.zeros((n, n))
    k = 0
    for s in states:
        m = s.mean.size
        cov[k:k + m, k:k + m] = s.cov
        k += m
    return GaussianState(mean, cov)


@dataclass(frozen=True)
class GaussianChannel:
    X: np.ndarray
    Y: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        d = np.asarray(self.d, dtype=float)
        n = d.size
        if n == 0 or n % 2 or X.shape != (n, n) or Y.shape != (n, n):
            raise ValueError("channel X, Y must be square and match the displacement length")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "Y", _frozen(0.5 * (Y + Y.T)))
        object.__setattr__(self, "d", _frozen(d))

    @property
    def mode_count(self) -> int:
        return self.d.size // 2

    @classmethod
    def identity(cls, mode_count: int = 1) -> "GaussianChannel":
        n = 2 * mode_count
        return cls(np.eye(n), np.zeros((n, n)), np.zeros(n))

    def symplectic_defect(self) -> float:
        omega = symplectic_form(self.mode_count)
        return float(np.abs(self.X @ omega @ self.X.T - omega).max())

    def cp_margin(self) -> float:
        """Smallest eigenvalue of ``Y + (i/4)(Omega - X Omega X^T)``."""
        omega = symplectic_form(self.mode_count)
        m = self.Y + 0.25j * (omega - self.X @ omega @ self.X.T)
        return float(np.linalg.eigvalsh(m).min())

    def then(self, other: "GaussianChannel") -> "GaussianChannel":
        """Channel applying ``self`` first and ``other`` second."""
        if other.mode_count != self.mode_count:
            raise ValueError("cannot compose channels on different mode counts")
        return GaussianChannel(
            other.X @ self.X,
            other.X @ self.Y @ other.X.T + other.Y,
            other.X @ self.d + other.d,
        )


def bogoliubov_block(m: complex, n: complex) -> np.ndarray:
    """Real 2x2 quadrature block of ``a_j -> m a_k + n a_k^dag``."""
    return np.array([
        [m.real + n.real, n.imag - m.imag],
        [m.imag + n.imag, m.real - n.real],
    ])


# Input states ---------------------------------------------------------------

@dataclass(frozen=True)
class InputSpec:
    kind: str = "vacuum"
    alpha_mag: float = 0.0
    alpha_phase: float = 0.0
    r: float = 0.0
    theta_s: float = 0.0

    def __post_init__(self):
        if self.kind not in INPUT_KINDS:
            raise ValueError(f"unknown input kind {self.kind!r}; expected one of {INPUT_KINDS}")
        alpha_mag = _as_finite(self.alpha_mag, "alpha_mag")
        r = _as_finite(self.r, "r")
        if alpha_mag < 0:
            raise ValueError(f"alpha_mag must be >= 0, got {alpha_mag}")
        if r < 0:
            raise ValueError(f"r must be >= 0, got {r}")
        if self.kind == "vacuum" and (alpha_mag != 0 or r != 0):
            raise ValueError("vacuum input requires alpha_mag = r = 0")
        if self.kind == "coherent" and r != 0:
            raise ValueError("coherent input requires r = 0")
        object.__setattr__(self, "alpha_mag", alpha_mag)
        object.__setattr__(self, "r", r)
        two_pi = 2 * math.pi
        object.__setattr__(self, "alpha_phase", _as_finite(self.alpha_phase, "alpha_phase") % two_pi)
        object.__setattr__(self, "theta_s", _as_finite(self.theta_s, "theta_s") % two_pi)

    @property
    def alpha(self) -> complex:
        return self.alpha_mag * complex(math.cos(self.alpha_phase), math.sin(self.alpha_phase))

    @property
    def n_alpha(self) -> float:
        return self.alpha_mag ** 2

    @property
    def mean_photon_number(self) -> float:
        return self.alpha_mag ** 2 + math.sinh(self.r) ** 2

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alpha_mag": self.alpha_mag,
            "alpha_phase": self.alpha_phase,
            "r": self.r,
            "theta_s": self.theta_s,
        }


def prepare_input(spec: InputSpec) -> GaussianState:
    """Single-mode moments of ``D(alpha) S(zeta)|0>``.

    ``S(zeta) = exp((zeta^* a^2 - zeta a^dag^2)/2)`` with ``zeta = r e^{i theta_s}``,
    so ``theta_s = 0`` squeezes X.
    """
    alpha = spec.alpha
    mean = np.array([alpha.real, alpha.imag])
    c2, s2 = math.cosh(2 * spec.r), math.sinh(2 * spec.r)
    cs, sn = math.cos(spec.theta_s), math.sin(spec.theta_s)
    cov = 0.25 * np.array([
        [c2 - s2 * cs, -s2 * sn],
        [-s2 * sn, c2 + s2 * cs],
    ])
    return GaussianState(mean, cov)


# Channels -------------------------------------------------------------------

def two_mode_squeezer(g: float, theta: float) -> GaussianChannel:
    """Raman process on (optical, atomic): ``a -> u a + v b^dag``, ``b -> u b + v a^dag``.

    ``u = cosh g`` and ``v = e^{i theta} sinh g``.
    """
    g = _as_finite(g, "g")
    theta = _as_finite(theta, "theta")
    u = complex(math.cosh(g))
    v = math.sinh(g) * complex(math.cos(theta), math.sin(theta))
    diag = bogoliubov_block(u, 0j)
    cross = bogoliubov_block(0j, v)
    X = np.block([[diag, cross], [cross, diag]])
    return GaussianChannel(X, np.zeros((4, 4)), np.zeros(4))


def phase_shift(phi: float) -> GaussianChannel:
    """``a -> e^{i phi} a``: rotates (X, P) counter-clockwise by ``phi``."""
    phi = _as_finite(phi, "phi")
    X = bogoliubov_block(complex(math.cos(phi), math.sin(phi)), 0j)
    return GaussianChannel(X, np.zeros((2, 2)), np.zeros(2))


def loss(T: float) -> GaussianChannel:
    """Beam splitter with transmission ``T`` whose other port is vacuum."""
    T = _as_finite(T, "T")
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {T}")
    return GaussianChannel(
        math.sqrt(T) * np.eye(2),
        (1.0 - T) * VACUUM_VARIANCE * np.eye(2),
        np.zeros(2),
    )


def dephase(gamma_tau: float) -> GaussianChannel:
    """Collisional dephasing ``b -> e^{-gamma tau} b + F``.

    The Langevin term has ``<F F^dag> = 1 - e^{-2 gamma tau}`` and
    ``<F^dag F> = 0``, which is exactly an attenuator with
    ``T = e^{-2 gamma tau}``.
    """
    gamma_tau = _as_finite(gamma_tau, "gamma_tau")
    if gamma_tau < 0:
        raise ValueError(f"gamma_tau must be >= 0, got {gamma_tau}")
    return loss(math.exp(-2.0 * gamma_tau))


def _embed(channel: GaussianChannel, mode_count: int, modes: Sequence[int]) -> GaussianChannel:
    modes = [int(m) for m in modes]
    if len(modes) != channel.mode_count:
        raise ValueError(f"channel acts on {channel.mode_count} mode(s) but {len(modes)} given")
    if len(set(modes)) != len(modes):
        raise ValueError(f"mode indices must be distinct, got {modes}")
    for m in modes:
        if not 0 <= m < mode_count:
            raise IndexError(f"mode index {m} out of range for {mode_count} modes")
    idx = np.array([[2 * m, 2 * m + 1] for m in modes]).ravel()
    n = 2 * mode_count
    X = np.eye(n)
    Y = np.zeros((n, n))
    d = np.zeros(n)
    X[np.ix_(idx, idx)] = channel.X
    Y[np.ix_(idx, idx)] = channel.Y
    d[idx] = channel.d
    return GaussianChannel(X, Y, d)


def apply(channel: GaussianChannel, state: GaussianState, modes: Sequence[int]) -> GaussianState:
    full = _embed(channel, state.mode_count, modes)
    mean = full.X @ state.mean + full.d
    cov = full.X @ state.cov @ full.X.T + full.Y
    return GaussianState(mean, cov)


# Observables ----------------------------------------------------------------

class ModeMoments(NamedTuple):
    mean_X: float
    mean_P: float
    var_X: float
    var_P: float
    cov_XP: float


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.mode_count:
        raise IndexError(f"mode index {mode} out of range for {state.mode_count} modes")


def moments(state: GaussianState, mode: int) -> ModeMoments:
    _check_mode(state, mode)
    i = 2 * mode
    return ModeMoments(
        float(state.mean[i]), float(state.mean[i + 1]),
        float(state.cov[i, i]), float(state.cov[i + 1, i + 1]), float(state.cov[i, i + 1]),
    )


def photon_number(state: GaussianState, mode: int) -> float:
    m = moments(state, mode)
    return m.var_X + m.var_P + m.mean_X ** 2 + m.mean_P ** 2 - 0.5


def photon_number_variance(state: GaussianState, mode: int) -> float:
    """Variance of ``a^dag a`` for one mode of a Gaussian state."""
    _check_mode(state, mode)
    i = 2 * mode
    # rescale to the vacuum = I/2 convention, where Var n = tr(V^2)/2 - 1/4 + d^T V d
    V = 2.0 * state.cov[i:i + 2, i:i + 2]
    d = math.sqrt(2.0) * state.mean[i:i + 2]
    return float(0.5 * np.trace(V @ V) - 0.25 + d @ V @ d)


def lcc(state: GaussianState, mode_i: int, mode_j: int) -> float:
    """Linear correlation coefficient between the X quadratures of two modes."""
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    i, j = 2 * mode_i, 2 * mode_j
    var_i, var_j = state.cov[i, i], state.cov[j, j]
    if var_i <= 0 or var_j <= 0:
        raise UndefinedLCCError(
            f"undefined LCC: zero variance in mode {mode_i if var_i <= 0 else mode_j}")
    j_val = state.cov[i, j] / math.sqrt(var_i * var_j)
    return float(min(1.0, max(-1.0, j_val)))
