"""Cross-path checks: moment engine vs closed-form algebra vs Fock oracle."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fock_oracle, sensitivity
from .gaussian_core import InputSpec
from .interferometer import InterferometerConfig, closed_form_mean_b, coeffs, run

ENGINE_TOL = 1e-10
ORACLE_TOL = 1e-4
ORACLE_CUTOFFS = (30, 40, 50)
MOMENT_FLOOR = 0.25


@dataclass
class CheckResult:
    name: str
    worst: float
    tol: float
    count: int
    inconclusive: int = 0

    @property
    def status(self) -> str:
        if not self.worst <= self.tol:
            return "fail"
        return "inconclusive" if self.inconclusive else "pass"


def random_input(rng: np.random.Generator, max_alpha: float, max_r: float,
                 kinds=("vacuum", "coherent", "squeezed_coherent")) -> InputSpec:
    kind = str(rng.choice(kinds))
    alpha = 0.0 if kind == "vacuum" else rng.uniform(0, max_alpha)
    r = rng.uniform(0, max_r) if kind == "squeezed_coherent" else 0.0
    return InputSpec(kind, alpha, rng.uniform(0, 2 * math.pi), r, rng.uniform(0, 2 * math.pi))


def random_config(rng: np.random.Generator, small: bool = False) -> InterferometerConfig:
    """Random lossy configuration; ``small`` keeps it inside the oracle's regime."""
    if small:
        max_g, max_alpha, max_r = fock_oracle.MAX_GAIN, fock_oracle.MAX_ALPHA, fock_oracle.MAX_SQUEEZING
        max_gt, beta = 1.0, 0.0
    else:
        max_g, max_alpha, max_r, max_gt = 2.0, 10.0, 2.0, 2.0
        beta = rng.uniform(0, 3) if rng.random() < 0.5 else 0.0
    input_b = InputSpec("coherent", beta, rng.uniform(0, 2 * math.pi)) if beta else InputSpec()
    return InterferometerConfig(
        g1=rng.uniform(0, max_g), g2=rng.uniform(0, max_g),
        theta1=rng.uniform(0, 2 * math.pi), theta2=rng.uniform(0, 2 * math.pi),
        phi=rng.uniform(-math.pi, math.pi), T=rng.uniform(0, 1), gamma_tau=rng.uniform(0, max_gt),
        input_a=random_input(rng, max_alpha, max_r), input_b=input_b,
    )


def engine_closed_form_gaps(config: InterferometerConfig) -> dict:
    out = run(config).state_out
    b_mean = closed_form_mean_b(config)
    gaps = {
        "mean_X_a2": sensitivity.rel_gap(out.mean[0], sensitivity.closed_form_mean(config), 1.0),
        "var_X_a2": sensitivity.rel_gap(out.cov[0, 0], sensitivity.closed_form_variance(config)),
        "mean_b2": max(sensitivity.rel_gap(out.mean[2], b_mean.real, 1.0),
                       sensitivity.rel_gap(out.mean[3], b_mean.imag, 1.0)),
    }
    c = coeffs(config.with_(T=1.0, gamma_tau=0.0))
    gaps["commutator"] = abs(abs(c.U) ** 2 - abs(c.V) ** 2 - 1.0)
    return gaps


def check_engine_closed_form(n: int = 1000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(n):
        for key, gap in engine_closed_form_gaps(random_config(rng)).items():
            worst[key] = max(worst.get(key, 0.0), gap)
    tols = {"commutator": 1e-12}
    return [CheckResult(f"engine_vs_closed_form.{k}", v, tols.get(k, ENGINE_TOL), n)
            for k, v in worst.items()]


def oracle_gap(config: InterferometerConfig, cutoffs=ORACLE_CUTOFFS) -> tuple[float | None, int]:
    """Worst normalized moment gap between oracle and engine, plus the cutoff used.

    Returns ``(None, last_cutoff)`` when every cutoff leaks.
    """
    start = max(cutoffs[0], fock_oracle.choose_cutoff(config))
    for d in [c for c in cutoffs if c >= start] or [start]:
        try:
            m = fock_oracle.simulate(config, d)
        except fock_oracle.TruncationError:
            continue
        out = run(config).state_out
        ref = np.concatenate([out.mean, out.cov.ravel()])
        got = np.concatenate([m.means, m.cov.ravel()])
        scale = np.maximum(np.abs(ref), MOMENT_FLOOR)
        return float(np.max(np.abs(got - ref) / scale)), d
    return None, d


def _oracle_task(args):
    seed, index = args
    rng = np.random.default_rng([seed, index])
    return oracle_gap(random_config(rng, small=True))


def check_oracle(n: int = 200, seed: int = 0, permits: int = 1,
                 redraw: bool = False) -> CheckResult:
    """Engine vs Fock oracle on ``n`` random small-regime configs.

    Configs that leak past every cutoff are inconclusive. With ``redraw``
    they are replaced by fresh draws (at most ``3 n`` draws in total) so that
    ``n`` configs are actually compared; the inconclusive count is kept.
    ``permits`` caps how many oracle simulations run at once; each holds a
    few dense (cutoff^2 x cutoff^2) complex matrices.
    """
    gaps: list[float] = []
    inconclusive = 0
    next_index = 0
    pool = ProcessPoolExecutor(max_workers=permits) if permits > 1 else None
    try:
        while len(gaps) < n and next_index < 3 * n:
            want = n - len(gaps) if redraw else n - next_index
            if want <= 0:
                break
            tasks = [(seed, i) for i in range(next_index, next_index + want)]
            next_index += want
            results = pool.map(_oracle_task, tasks) if pool else map(_oracle_task, tasks)
            for gap, _ in results:
                if gap is None:
                    inconclusive += 1
                else:
                    gaps.append(gap)
            if not redraw:
                break
    finally:
        if pool:
            pool.shutdown()
    return CheckResult("engine_vs_fock_oracle", max(gaps, default=0.0), ORACLE_TOL,
                       len(gaps), inconclusive=inconclusive)


def validate(regime: str = "fast", seed: int = 0, n_engine: int = 1000,
             n_oracle: int = 200, permits: int = 1) -> list[CheckResult]:
    if regime not in ("fast", "full"):
        raise ValueError(f"regime must be fast or full, got {regime!r}")
    results = check_engine_closed_form(n_engine, seed)
    if regime == "full":
        results.append(check_oracle(n_oracle, seed, permits))
    return results
