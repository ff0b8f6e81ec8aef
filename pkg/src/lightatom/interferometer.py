"""Light-atom SU(1,1) interferometer: two Raman processes around a lossy arm pair.

Pipeline (mode 0 = optical, mode 1 = atomic spin wave)::

    RP1(g1, theta1) -> loss(T), phase(phi) on optics; dephase(gamma_tau) on atoms
                    -> RP2(g2, theta2)

``run`` propagates moments numerically; ``coeffs`` evaluates the closed-form
output coefficients of the optical mode,

    a2 = U1 a0 + V1 b0^dag + sqrt(R) u2 V + v2 F^dag
    b2 = e^{-i phi} [U2 b0 + V2 a0^dag] + sqrt(R) v2 V^dag + u2 F
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from . import gaussian_core as gc
from .gaussian_core import GaussianState, InputSpec

OPTICAL = 0
ATOMIC = 1


@dataclass(frozen=True)
class InterferometerConfig:
    g1: float = 1.0
    g2: float = 1.0
    theta1: float = 0.0
    theta2: float = math.pi
    phi: float = 0.0
    T: float = 1.0
    gamma_tau: float = 0.0
    input_a: InputSpec = field(default_factory=InputSpec)
    input_b: InputSpec = field(default_factory=InputSpec)

    def __post_init__(self):
        for name in ("g1", "g2", "theta1", "theta2", "phi", "T", "gamma_tau"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.g1 < 0 or self.g2 < 0:
            raise ValueError("Raman gains must be >= 0")
        if not 0.0 <= self.T <= 1.0:
            raise ValueError(f"T must lie in [0, 1], got {self.T}")
        if self.gamma_tau < 0:
            raise ValueError(f"gamma_tau must be >= 0, got {self.gamma_tau}")
        for name in ("input_a", "input_b"):
            spec = getattr(self, name)
            if isinstance(spec, dict):
                object.__setattr__(self, name, InputSpec(**spec))
            elif not isinstance(spec, InputSpec):
                raise TypeError(f"{name} must be an InputSpec")

    @property
    def is_balanced(self) -> bool:
        d = (self.theta2 - self.theta1 - math.pi) % (2 * math.pi)
        return self.g1 == self.g2 and min(d, 2 * math.pi - d) < 1e-12

    @property
    def is_lossless(self) -> bool:
        return self.T == 1.0 and self.gamma_tau == 0.0

    def with_(self, **changes) -> "InterferometerConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        out = {name: getattr(self, name)
               for name in ("g1", "g2", "theta1", "theta2", "phi", "T", "gamma_tau")}
        out["input_a"] = self.input_a.as_dict()
        out["input_b"] = self.input_b.as_dict()
        return out


def balanced(g: float, theta1: float = 0.0, **kwargs) -> InterferometerConfig:
    """Config with ``g1 = g2 = g`` and ``theta2 = theta1 + pi``."""
    return InterferometerConfig(g1=g, g2=g, theta1=theta1, theta2=theta1 + math.pi, **kwargs)


class RunResult(NamedTuple):
    state_in: GaussianState
    state_after_rp1: GaussianState
    state_mid: GaussianState
    state_out: GaussianState


def input_state(config: InterferometerConfig) -> GaussianState:
    return gc.product_state(gc.prepare_input(config.input_a), gc.prepare_input(config.input_b))


def run(config: InterferometerConfig) -> RunResult:
    pair = (OPTICAL, ATOMIC)
    s0 = input_state(config)
    s1 = gc.apply(gc.two_mode_squeezer(config.g1, config.theta1), s0, pair)
    s = gc.apply(gc.loss(config.T), s1, [OPTICAL])
    s = gc.apply(gc.phase_shift(config.phi), s, [OPTICAL])
    mid = gc.apply(gc.dephase(config.gamma_tau), s, [ATOMIC])
    out = gc.apply(gc.two_mode_squeezer(config.g2, config.theta2), mid, pair)
    return RunResult(s0, s1, mid, out)


@dataclass(frozen=True)
class CoeffSet:
    U1: complex
    V1: complex
    U2: complex
    V2: complex
    u2: complex
    v2: complex
    U: complex | None = None
    V: complex | None = None

    @property
    def abs_U1_sq(self) -> float:
        return abs(self.U1) ** 2

    @property
    def abs_V1_sq(self) -> float:
        return abs(self.V1) ** 2


def raman_uv(g: float, theta: float) -> tuple[complex, complex]:
    return complex(math.cosh(g)), math.sinh(g) * cmath.exp(1j * theta)


def coeffs(config: InterferometerConfig) -> CoeffSet:
    u1, v1 = raman_uv(config.g1, config.theta1)
    u2, v2 = raman_uv(config.g2, config.theta2)
    st = math.sqrt(config.T)
    damp = math.exp(-config.gamma_tau)
    ph = cmath.exp(1j * config.phi)
    U1 = st * u1 * u2 * ph + damp * v1.conjugate() * v2
    V1 = st * v1 * u2 * ph + damp * u1.conjugate() * v2
    U2 = damp * u1 * u2 * ph + st * v1.conjugate() * v2
    V2 = damp * v1 * u2 * ph + st * u1.conjugate() * v2
    U = V = None
    if config.is_lossless:
        g1, g2 = config.g1, config.g2
        rel = cmath.exp(1j * (config.phi + config.theta1 - config.theta2))
        U = (math.cosh(g1) * math.cosh(g2) * rel + math.sinh(g1) * math.sinh(g2)) \
            * cmath.exp(1j * (config.theta2 - config.theta1))
        V = (math.sinh(g1) * math.cosh(g2) * rel + math.cosh(g1) * math.sinh(g2)) \
            * cmath.exp(1j * config.theta2)
    return CoeffSet(U1, V1, U2, V2, u2, v2, U, V)


def closed_form_mean(config: InterferometerConfig) -> complex:
    """``<a2>`` from the output coefficients."""
    c = coeffs(config)
    return c.U1 * config.input_a.alpha + c.V1 * config.input_b.alpha.conjugate()


def closed_form_mean_b(config: InterferometerConfig) -> complex:
    """``<b2>`` from the output coefficients."""
    c = coeffs(config)
    return cmath.exp(-1j * config.phi) * (
        c.U2 * config.input_b.alpha + c.V2 * config.input_a.alpha.conjugate())


class ProbeNumber(NamedTuple):
    n_ph: float
    n_photon: float
    n_atom: float


def phase_sensing_number(config: InterferometerConfig, after: str = "rp1") -> ProbeNumber:
    """Quanta inside the interferometer.

    ``after="rp1"`` counts right after the first Raman process (before any
    loss); ``after="loss"`` counts after loss and dephasing.
    """
    result = run(config)
    if after == "rp1":
        state = result.state_after_rp1
    elif after == "loss":
        state = result.state_mid
    else:
        raise ValueError(f"unknown probe-number convention {after!r}")
    n_photon = gc.photon_number(state, OPTICAL)
    n_atom = gc.photon_number(state, ATOMIC)
    return ProbeNumber(n_photon + n_atom, n_photon, n_atom)


def raman_gain(g: float) -> float:
    return 2.0 * math.sinh(g) ** 2


def probe_number_formula(n_in: float, g: float) -> float:
    """Total quanta after RP1 for a vacuum atomic input."""
    G = raman_gain(g)
    return n_in + n_in * G + G


def lcc_rp1(config: InterferometerConfig) -> float:
    return gc.lcc(run(config).state_after_rp1, OPTICAL, ATOMIC)


def lcc_out(config: InterferometerConfig) -> float:
    return gc.lcc(run(config).state_out, OPTICAL, ATOMIC)
