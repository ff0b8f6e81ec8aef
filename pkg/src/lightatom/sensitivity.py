"""Error-propagation phase sensitivity of the homodyne-detected optical output.

The observable is ``X_a2 = (a2 + a2^dag)/2``, and the sensitivity is
``delta_phi = sqrt(Var X_a2) / |d<X_a2>/d phi|``. It is compared against the
standard quantum limit ``1/sqrt(n_ph)`` and the Heisenberg limit ``1/n_ph``,
where ``n_ph`` counts photons plus atomic excitations inside the interferometer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import gaussian_core as gc
from .interferometer import OPTICAL, InterferometerConfig, coeffs, phase_sensing_number, run

FD_STEP = 1e-5
MIN_FD_STEP = 1e-9
ZERO_SLOPE = 1e-12
FLAT_TOL = 1e-14
GRID_POINTS = 720
REFINE_TOL = 1e-8

BASELINES = {"pre_loss": "rp1", "post_loss": "loss"}
FREE_PARAMETERS = ("phi", "theta_s", "theta_alpha")


class NonInformativePointError(ValueError):
    """The output mean does not depend on phi at the operating point."""


class StepUnderflowError(ValueError):
    pass


class FlatLandscapeError(ValueError):
    pass


class Slope(NamedTuple):
    analytic: float
    numeric: float


class OutputVariance(NamedTuple):
    engine: float
    closed_form: float


@dataclass(frozen=True)
class SensitivityReport:
    phi: float
    mean_X: float
    slope: float
    var_X: float
    delta_phi: float
    n_ph: float
    sql: float
    hl: float
    path_disagreement: float
    baseline: str = "pre_loss"

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def rel_gap(a: float, b: float, floor: float = 0.0) -> float:
    scale = max(abs(a), abs(b), floor)
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


# Closed-form expressions ------------------------------------------------------

def _vacuum_noise_b(config: InterferometerConfig) -> None:
    if config.input_b.r != 0:
        raise ValueError("closed-form variance assumes a vacuum-noise atomic input")


def _terms(config: InterferometerConfig, phi, theta_s, theta_alpha):
    """Mean, slope and variance of X_a2 from the output coefficients.

    Array arguments broadcast, which the optimizer relies on.
    """
    g1, g2, t1, t2 = config.g1, config.g2, config.theta1, config.theta2
    u1, v1 = math.cosh(g1), math.sinh(g1) * np.exp(1j * t1)
    u2, v2 = math.cosh(g2), math.sinh(g2) * np.exp(1j * t2)
    st = math.sqrt(config.T)
    R = 1.0 - config.T
    damp = math.exp(-config.gamma_tau)
    ph = np.exp(1j * np.asarray(phi, dtype=float))
    U1 = st * u1 * u2 * ph + damp * np.conj(v1) * v2
    V1 = st * v1 * u2 * ph + damp * u1 * v2
    dU1 = 1j * st * u1 * u2 * ph
    dV1 = 1j * st * v1 * u2 * ph

    a = config.input_a
    alpha = a.alpha_mag * np.exp(1j * np.asarray(theta_alpha, dtype=float))
    beta_c = np.conj(config.input_b.alpha)
    mean = np.real(U1 * alpha + V1 * beta_c)
    slope = np.real(dU1 * alpha + dV1 * beta_c)

    big_theta = np.asarray(theta_s, dtype=float) / 2 + np.angle(U1)
    squeeze = (math.exp(2 * a.r) * np.sin(big_theta) ** 2
               + math.exp(-2 * a.r) * np.cos(big_theta) ** 2)
    noise = (R * u2 ** 2 + abs(v2) ** 2 * (1.0 - math.exp(-2 * config.gamma_tau))) / 4
    var = (np.abs(U1) ** 2 * squeeze + np.abs(V1) ** 2) / 4 + noise
    return mean, slope, var


def closed_form_mean(config: InterferometerConfig) -> float:
    c = coeffs(config)
    return (c.U1 * config.input_a.alpha + c.V1 * config.input_b.alpha.conjugate()).real


def closed_form_variance(config: InterferometerConfig) -> float:
    """Output X-quadrature variance for coherent or squeezed-coherent optical input."""
    _vacuum_noise_b(config)
    c = coeffs(config)
    R = 1.0 - config.T
    noise = (R * abs(c.u2) ** 2
             + abs(c.v2) ** 2 * (1.0 - math.exp(-2 * config.gamma_tau))) / 4
    a = config.input_a
    if a.kind == "squeezed_coherent":
        big_theta = a.theta_s / 2 + math.atan2(c.U1.imag, c.U1.real)
        squeeze = (math.exp(2 * a.r) * math.sin(big_theta) ** 2
                   + math.exp(-2 * a.r) * math.cos(big_theta) ** 2)
        return (c.abs_U1_sq * squeeze + c.abs_V1_sq) / 4 + noise
    return (c.abs_U1_sq + c.abs_V1_sq) / 4 + noise


def analytic_slope(config: InterferometerConfig) -> float:
    """d<X_a2>/d phi, differentiating U1 and V1 in closed form."""
    _, s, _ = _terms(config, config.phi, config.input_a.theta_s, config.input_a.alpha_phase)
    return float(s)


def balanced_slope(T: float, n_alpha: float, g: float, phi: float, theta_alpha: float) -> float:
    """|d<X_a2>/d phi| of the balanced interferometer with vacuum atomic input."""
    return math.sqrt(T * n_alpha) * math.cosh(g) ** 2 * abs(math.sin(phi + theta_alpha))


def optimal_delta_phi_coherent(n_alpha: float, g: float) -> float:
    return 1.0 / (math.sqrt(n_alpha) * 2 * math.cosh(g) ** 2)


def optimal_delta_phi_squeezed(n_alpha: float, g: float, r: float) -> float:
    return optimal_delta_phi_coherent(n_alpha, g) * math.exp(-r)


def heisenberg_estimate(n_alpha: float, g: float) -> float:
    """Large-gain form ``1/(2 N_alpha (G + 2))`` of the squeezed optimum at ``N_alpha = e^{2r}/4``."""
    G = 2 * math.sinh(g) ** 2
    return 1.0 / (2 * n_alpha * (G + 2))


# Engine-backed quantities ----------------------------------------------------

def engine_mean(config: InterferometerConfig) -> float:
    return float(run(config).state_out.mean[2 * OPTICAL])


def engine_variance(config: InterferometerConfig) -> float:
    return gc.moments(run(config).state_out, OPTICAL).var_X


def numeric_slope(config: InterferometerConfig, step: float = FD_STEP) -> float:
    if not step >= MIN_FD_STEP:
        raise StepUnderflowError(f"finite-difference step {step!r} below {MIN_FD_STEP}")
    up = engine_mean(config.with_(phi=config.phi + step))
    down = engine_mean(config.with_(phi=config.phi - step))
    return (up - down) / (2 * step)


def slope(config: InterferometerConfig, step: float = FD_STEP) -> Slope:
    return Slope(analytic_slope(config), numeric_slope(config, step))


def output_variance(config: InterferometerConfig) -> OutputVariance:
    return OutputVariance(engine_variance(config), closed_form_variance(config))


def limits(n_ph: float) -> tuple[float, float]:
    """(SQL, HL) for ``n_ph`` probe quanta."""
    if not n_ph > 0:
        raise ValueError(f"probe number must be positive, got {n_ph}")
    return 1.0 / math.sqrt(n_ph), 1.0 / n_ph


def probe_number(config: InterferometerConfig, baseline: str = "pre_loss") -> float:
    try:
        after = BASELINES[baseline]
    except KeyError:
        raise ValueError(f"unknown baseline {baseline!r}; expected one of {sorted(BASELINES)}") from None
    return phase_sensing_number(config, after=after).n_ph


def delta_phi(config: InterferometerConfig, baseline: str = "pre_loss") -> SensitivityReport:
    out = run(config).state_out
    m = gc.moments(out, OPTICAL)
    s = analytic_slope(config)
    if abs(s) < ZERO_SLOPE:
        raise NonInformativePointError(
            f"non-informative operating point: slope {s:.3g} at phi={config.phi:.6g}")
    gaps = [rel_gap(numeric_slope(config), s),
            rel_gap(m.mean_X, closed_form_mean(config), floor=1.0)]
    if config.input_b.r == 0:
        gaps.append(rel_gap(m.var_X, closed_form_variance(config)))
    n_ph = probe_number(config, baseline)
    sql, hl = limits(n_ph)
    return SensitivityReport(
        phi=config.phi, mean_X=m.mean_X, slope=s, var_X=m.var_X,
        delta_phi=math.sqrt(m.var_X) / abs(s), n_ph=n_ph, sql=sql, hl=hl,
        path_disagreement=max(gaps), baseline=baseline,
    )


def hl_ratio(config: InterferometerConfig, baseline: str = "pre_loss") -> float:
    report = delta_phi(config, baseline)
    return report.delta_phi * report.n_ph


# Optimization ------------------------------------------------------------------

class OptimumResult(NamedTuple):
    argmin: dict
    delta_phi_min: float
    evaluations: int


_RANGES = {
    "phi": (-math.pi, math.pi),
    "theta_s": (0.0, 2 * math.pi),
    "theta_alpha": (0.0, 2 * math.pi),
}


def golden_section(f, a: float, b: float, tol: float = REFINE_TOL) -> tuple[float, float, int]:
    """Minimize a unimodal ``f`` on [a, b]; returns (x, f(x), evaluations)."""
    inv_phi = (math.sqrt(5) - 1) / 2
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        n += 1
    x = 0.5 * (a + b)
    return x, f(x), n + 1


def sensitivity_landscape(config: InterferometerConfig, phi, theta_s, theta_alpha):
    """Vectorized delta_phi over broadcastable parameter arrays; zero slope gives inf."""
    _vacuum_noise_b(config)
    _, s, var = _terms(config, phi, theta_s, theta_alpha)
    s = np.abs(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(var) / s
    return np.where(s < ZERO_SLOPE, np.inf, out)


def optimize(config: InterferometerConfig, free: Iterable[str],
             grid_points: int = GRID_POINTS, tol: float = REFINE_TOL) -> OptimumResult:
    """Minimize delta_phi over a subset of {phi, theta_s, theta_alpha}.

    A uniform grid (tensor grid for up to two free parameters, cycled
    pairwise tensor scans for three) locates the basin; cyclic golden-section refinement
    within one grid cell of the best point then polishes it to ``tol``.
    Ties go to the smallest parameter values.
    """
    requested = set(free)
    free = [p for p in FREE_PARAMETERS if p in requested]
    if not free or requested - set(FREE_PARAMETERS):
        raise ValueError(f"free parameters must be a non-empty subset of {FREE_PARAMETERS}")
    if "theta_s" in free and config.input_a.kind != "squeezed_coherent":
        raise ValueError("theta_s is only meaningful for a squeezed_coherent input")

    point = {"phi": config.phi, "theta_s": config.input_a.theta_s,
             "theta_alpha": config.input_a.alpha_phase}
    grids = {p: np.linspace(*_RANGES[p], grid_points, endpoint=False) for p in free}
    steps = {p: (_RANGES[p][1] - _RANGES[p][0]) / grid_points for p in free}

    def evaluate(**kw):
        args = dict(point, **kw)
        return sensitivity_landscape(config, args["phi"], args["theta_s"], args["theta_alpha"])

    def scan(names):
        nonlocal evaluations
        mesh = np.meshgrid(*(grids[p] for p in names), indexing="ij")
        values = evaluate(**dict(zip(names, mesh)))
        evaluations += values.size
        idx = np.unravel_index(np.argmin(values), values.shape)
        for p, m in zip(names, mesh):
            point[p] = float(m[idx])
        finite = values[np.isfinite(values)]
        return (finite.max() - finite.min()) if finite.size else None

    evaluations = 0
    if len(free) <= 2:
        spread = scan(free)
        if spread is None:
            raise NonInformativePointError("slope vanishes everywhere on the search grid")
    else:
        # pairwise tensor scans, cycled until the grid point stops moving
        spreads = []
        for _ in range(4):
            before = dict(point)
            for pair in ((free[0], free[1]), (free[0], free[2]), (free[1], free[2])):
                spreads.append(scan(pair))
            if point == before:
                break
        spreads = [s for s in spreads if s is not None]
        if not spreads:
            raise NonInformativePointError("slope vanishes everywhere on the search grid")
        spread = max(spreads)
    if spread < FLAT_TOL:
        raise FlatLandscapeError("delta_phi is flat over the search grid")

    best = float(evaluate())
    for _ in range(100):
        moved = 0.0
        for p in free:
            x0 = point[p]
            x, fx, n = golden_section(lambda x: float(evaluate(**{p: x})),
                                      x0 - steps[p], x0 + steps[p], tol)
            evaluations += n
            if fx < best:
                moved = max(moved, abs(x - x0))
                point[p], best = x, fx
        if moved < tol:
            break
    return OptimumResult({p: point[p] for p in free}, best, evaluations)


def apply_parameters(config: InterferometerConfig, params: dict) -> InterferometerConfig:
    """Config with optimizer parameters written back."""
    a = config.input_a
    spec = gc.InputSpec(a.kind, a.alpha_mag, params.get("theta_alpha", a.alpha_phase),
                        a.r, params.get("theta_s", a.theta_s))
    return config.with_(phi=params.get("phi", config.phi), input_a=spec)


def sql_crossing(config: InterferometerConfig, axis: str, lo: float, hi: float,
                 baseline: str = "pre_loss", points: int = 201) -> float | None:
    """Value of ``axis`` (T or gamma_tau) where delta_phi crosses the SQL.

    Scans ``points`` values between ``lo`` and ``hi`` for the first sign change
    of ``delta_phi - sql`` and polishes it with Brent's method. Returns None
    when there is no crossing in the interval.
    """
    if axis not in ("T", "gamma_tau"):
        raise ValueError(f"crossing axis must be T or gamma_tau, got {axis!r}")

    def excess(x):
        try:
            rep = delta_phi(config.with_(**{axis: x}), baseline)
        except NonInformativePointError:
            return math.inf
        return rep.delta_phi - rep.sql

    xs = np.linspace(lo, hi, points)
    vals = [excess(x) for x in xs]
    for i in range(points - 1):
        if vals[i] == 0.0:
            return float(xs[i])
        if np.sign(vals[i]) != np.sign(vals[i + 1]):
            if math.isinf(vals[i]):
                continue
            return float(brentq(excess, xs[i], xs[i + 1], xtol=1e-12))
    return None
