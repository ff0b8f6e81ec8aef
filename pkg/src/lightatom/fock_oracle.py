"""Brute-force two-mode Fock-space simulator used to cross-check the Gaussian engine.

Density matrices live on ``|n_a, n_b>`` with ``n < cutoff`` per mode, flattened
as ``n_a * cutoff + n_b``. Everything is built from explicit operators:
matrix exponentials for the Raman unitaries and input preparation, Kraus
operators for loss and dephasing. This module is deliberately simple and
slow; it is a correctness instrument only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.special import comb

from .interferometer import InterferometerConfig, run
from .gaussian_core import InputSpec, photon_number, photon_number_variance

DEFAULT_CUTOFF = 30
LEAKAGE_THRESHOLD = 1e-8
PREP_PADDING = 30

# validated small-parameter regime at the default cutoff
MAX_GAIN = 0.8
MAX_ALPHA = 1.5
MAX_SQUEEZING = 0.6


class TruncationError(RuntimeError):
    """Population at the Fock cutoff exceeds the leakage threshold."""


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


@dataclass(frozen=True)
class FockDensityMatrix:
    rho: np.ndarray
    cutoff: int

    def check(self, tol_trace: float = 1e-10, tol_herm: float = 1e-12, tol_pos: float = 1e-8) -> None:
        rho = self.rho
        trace = np.trace(rho).real
        if abs(trace - 1.0) > tol_trace:
            raise ValueError(f"trace {trace!r} deviates from 1")
        if np.abs(rho - rho.conj().T).max() > tol_herm:
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol_pos:
            raise ValueError("density matrix has negative eigenvalues")

    def edge_population(self) -> float:
        """Largest population at ``n = cutoff - 1`` in either mode."""
        d = self.cutoff
        p = np.real(np.diag(self.rho)).reshape(d, d)
        return float(max(p[d - 1, :].sum(), p[:, d - 1].sum()))


def _as_tensor(rho: np.ndarray, d: int) -> np.ndarray:
    return rho.reshape(d, d, d, d)


@dataclass(frozen=True)
class SectorUnitary:
    """A two-mode unitary that is block diagonal in ``n_a - n_b``.

    ``blocks[k]`` acts on the flattened basis indices ``index[k]``.
    """
    cutoff: int
    index: tuple
    blocks: tuple

    def dense(self) -> np.ndarray:
        d = self.cutoff
        U = np.zeros((d * d, d * d), dtype=complex)
        for idx, block in zip(self.index, self.blocks):
            U[np.ix_(idx, idx)] = block
        return U

    def defect(self) -> float:
        return max(float(np.abs(b.conj().T @ b - np.eye(len(b))).max()) for b in self.blocks)

    def conjugate_into(self, rho: np.ndarray) -> np.ndarray:
        """``U rho U^dag`` using dense products block by block."""
        perm = np.concatenate(self.index)
        work = rho[np.ix_(perm, perm)]
        start = 0
        for block in self.blocks:
            sl = slice(start, start + len(block))
            work[sl, :] = block @ work[sl, :]
            work[:, sl] = work[:, sl] @ block.conj().T
            start += len(block)
        out = np.empty_like(rho)
        out[np.ix_(perm, perm)] = work
        return out


def tms_sectors(g: float, theta: float, cutoff: int) -> SectorUnitary:
    """``exp(zeta a^dag b^dag - zeta^* a b)`` with ``zeta = g e^{i theta}``, by sector.

    In the Heisenberg picture this gives ``a -> cosh g a + e^{i theta} sinh g b^dag``.
    The generator conserves ``n_a - n_b``, so each sector is exponentiated
    separately.
    """
    d = cutoff
    zeta = g * complex(math.cos(theta), math.sin(theta))
    index, blocks = [], []
    for k in range(-(d - 1), d):
        # sector states |n + max(k,0), n + max(-k,0)>
        na0, nb0 = max(k, 0), max(-k, 0)
        size = d - abs(k)
        gen = np.zeros((size, size), dtype=complex)
        for n in range(size - 1):
            # <n+1, n+1| a^dag b^dag |n, n> in the sector
            amp = math.sqrt((na0 + n + 1) * (nb0 + n + 1))
            gen[n + 1, n] = zeta * amp
            gen[n, n + 1] = -zeta.conjugate() * amp
        index.append(np.array([(na0 + n) * d + (nb0 + n) for n in range(size)]))
        blocks.append(expm(gen))
    return SectorUnitary(d, tuple(index), tuple(blocks))


def tms_unitary(g: float, theta: float, cutoff: int) -> np.ndarray:
    """Dense matrix of :func:`tms_sectors`."""
    return tms_sectors(g, theta, cutoff).dense()


def unitarity_defect(U) -> float:
    U = sparse.csr_matrix(U)
    gap = U.conj().T @ U - sparse.identity(U.shape[0], format="csr")
    return float(abs(gap).max())


def loss_kraus(T: float, cutoff: int) -> list[np.ndarray]:
    """Kraus operators of a pure-loss channel with transmission ``T``."""
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {T}")
    if T == 1.0:
        return [np.eye(cutoff, dtype=complex)]
    ops = []
    for k in range(cutoff):
        K = np.zeros((cutoff, cutoff), dtype=complex)
        for n in range(k, cutoff):
            K[n - k, n] = math.sqrt(comb(n, k) * T ** (n - k) * (1 - T) ** k)
        ops.append(K)
    return ops


def apply_channel(state: FockDensityMatrix, ops, which_mode: int | None = None) -> FockDensityMatrix:
    """Apply a unitary, a :class:`SectorUnitary` or a list of Kraus operators.

    With ``which_mode=None`` the operator(s) act on the full two-mode space,
    otherwise on mode 0 (optical) or 1 (atomic) only.
    """
    if not isinstance(ops, (list, tuple, SectorUnitary)):
        ops = [ops]
    d = state.cutoff
    if isinstance(ops, SectorUnitary):
        rho = ops.conjugate_into(state.rho)
    elif which_mode is None:
        rho = np.zeros_like(state.rho)
        for K in ops:
            K = sparse.csr_matrix(K)
            rho += (K @ (K @ state.rho).conj().T).conj().T
    else:
        if which_mode not in (0, 1):
            raise IndexError(f"mode index {which_mode} out of range for 2 modes")
        # superoperator on the (ket, bra) indices of the chosen mode
        S = sparse.csr_matrix((d * d, d * d), dtype=complex)
        for K in ops:
            K = sparse.csr_matrix(K)
            S = S + sparse.kron(K, K.conj(), format="csr")
        t = _as_tensor(state.rho, d)
        order = (0, 2, 1, 3) if which_mode == 0 else (1, 3, 0, 2)
        moved = t.transpose(order).reshape(d * d, d * d)
        out = (S @ moved).reshape(d, d, d, d).transpose(np.argsort(order))
        rho = out.reshape(d * d, d * d)
    return FockDensityMatrix(0.5 * (rho + rho.conj().T), d)


def prepare_ket(spec: InputSpec, cutoff: int, padding: int = PREP_PADDING) -> tuple[np.ndarray, float]:
    """``D(alpha) S(zeta)|0>`` truncated to ``cutoff`` levels.

    Built on ``cutoff + padding`` levels so the exponentials are accurate near
    the retained edge; returns the ket and the norm lost by truncation.
    """
    big = cutoff + padding
    a = annihilation(big)
    ad = a.conj().T
    zeta = spec.r * complex(math.cos(spec.theta_s), math.sin(spec.theta_s))
    alpha = spec.alpha
    ket = np.zeros(big, dtype=complex)
    ket[0] = 1.0
    if spec.r:
        ket = expm(0.5 * (zeta.conjugate() * a @ a - zeta * ad @ ad)) @ ket
    if alpha:
        ket = expm(alpha * ad - alpha.conjugate() * a) @ ket
    kept = ket[:cutoff]
    norm = float(np.vdot(kept, kept).real)
    return kept / math.sqrt(norm), 1.0 - norm


def phase_unitary(phi: float, cutoff: int) -> np.ndarray:
    """``exp(i phi n)`` on one mode, realizing ``a -> e^{i phi} a``."""
    return np.diag(np.exp(1j * phi * np.arange(cutoff)))


@dataclass(frozen=True)
class OracleMoments:
    means: np.ndarray  # (X_a, P_a, X_b, P_b)
    cov: np.ndarray  # 4x4 symmetrized covariance
    n: tuple[float, float]
    lcc: float
    leakage: float
    unitarity_defect: float


def _expect(rho: np.ndarray, op: sparse.spmatrix) -> complex:
    return complex(op.multiply(rho.T).sum())


def measure(state: FockDensityMatrix) -> OracleMoments:
    d = state.cutoff
    a1 = sparse.csr_matrix(annihilation(d))
    eye = sparse.identity(d, format="csr")
    a = sparse.kron(a1, eye, format="csr")
    b = sparse.kron(eye, a1, format="csr")
    quads = []
    for op in (a, b):
        quads.append(0.5 * (op + op.conj().T))
        quads.append(-0.5j * (op - op.conj().T))
    rho = state.rho
    means = np.array([_expect(rho, q).real for q in quads])
    cov = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            second = _expect(rho, quads[i] @ quads[j] + quads[j] @ quads[i]).real / 2
            cov[i, j] = cov[j, i] = second - means[i] * means[j]
    n = (_expect(rho, a.conj().T @ a).real, _expect(rho, b.conj().T @ b).real)
    lcc = float(cov[0, 2] / math.sqrt(cov[0, 0] * cov[2, 2]))
    return OracleMoments(means, cov, n, lcc, state.edge_population(), 0.0)


def choose_cutoff(config: InterferometerConfig, sigmas: float = 6.0) -> int:
    """Smallest cutoff covering ``<n> + sigmas * std(n)`` in every mode at every stage."""
    need = 1.0
    for state in run(config):
        for mode in (0, 1):
            n = photon_number(state, mode)
            var = max(photon_number_variance(state, mode), 0.0)
            need = max(need, n + sigmas * math.sqrt(var))
    return int(math.ceil(need)) + 1


def in_small_regime(config: InterferometerConfig) -> bool:
    return (max(config.g1, config.g2) <= MAX_GAIN
            and max(config.input_a.alpha_mag, config.input_b.alpha_mag) <= MAX_ALPHA
            and max(config.input_a.r, config.input_b.r) <= MAX_SQUEEZING)


def simulate(config: InterferometerConfig, cutoff: int = DEFAULT_CUTOFF,
             leakage_threshold: float = LEAKAGE_THRESHOLD) -> OracleMoments:
    """Run the full interferometer on density matrices and return output moments.

    Raises TruncationError when any stage populates the cutoff edge above
    ``leakage_threshold``.
    """
    d = cutoff
    ka, lost_a = prepare_ket(config.input_a, d)
    kb, lost_b = prepare_ket(config.input_b, d)
    if max(lost_a, lost_b) > leakage_threshold:
        raise TruncationError(f"input preparation loses {max(lost_a, lost_b):.2e} norm at cutoff {d}")
    ket = np.kron(ka, kb)
    state = FockDensityMatrix(np.outer(ket, ket.conj()), d)

    def guard(s: FockDensityMatrix, stage: str) -> FockDensityMatrix:
        edge = s.edge_population()
        if edge > leakage_threshold:
            raise TruncationError(f"edge population {edge:.2e} after {stage} at cutoff {d}")
        return s

    U1 = tms_sectors(config.g1, config.theta1, d)
    U2 = tms_sectors(config.g2, config.theta2, d)
    defect = max(U1.defect(), U2.defect())
    state = guard(apply_channel(state, U1), "RP1")
    state = apply_channel(state, loss_kraus(config.T, d), 0)
    state = apply_channel(state, [phase_unitary(config.phi, d)], 0)
    state = apply_channel(state, loss_kraus(math.exp(-2 * config.gamma_tau), d), 1)
    state = guard(apply_channel(state, U2), "RP2")
    m = measure(state)
    return OracleMoments(m.means, m.cov, m.n, m.lcc, m.leakage, defect)


def simulate_rp1(config: InterferometerConfig, cutoff: int = DEFAULT_CUTOFF) -> OracleMoments:
    """Moments right after the first Raman process."""
    d = cutoff
    ka, _ = prepare_ket(config.input_a, d)
    kb, _ = prepare_ket(config.input_b, d)
    ket = np.kron(ka, kb)
    state = FockDensityMatrix(np.outer(ket, ket.conj()), d)
    U1 = tms_sectors(config.g1, config.theta1, d)
    m = measure(apply_channel(state, U1))
    return OracleMoments(m.means, m.cov, m.n, m.lcc, m.leakage, U1.defect())
