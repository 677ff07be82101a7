"""Small-data decay and scattering diagnostics for the nonlinear flow.

For ``k >= 3`` and small data, ``(1 + t)^(2 theta/3) ||u(t)||_{L^p}`` stays
bounded with ``p = 2(k+1)`` and ``theta = k/(k+1)``, and the
interaction-picture state ``v(t) = U(-t) u(t)`` converges in ``H^1`` to an
asymptotic state ``f_+``.  On the torus these statements can only be
checked before wrap-around, so every verdict carries the validity window.

Only ``t -> +infinity`` is implemented; the backward limit follows from the
symmetry ``(x, t) -> (-x, -t)`` of the equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calculus import Trajectory, h1_norm, lp_norm, power_integral
from .grid import Field
from .linear_group import propagate, validity_horizon

FEASIBILITY_THRESHOLD = (3.0 + math.sqrt(33.0)) / 4.0


def k_feasibility(k: float) -> tuple[bool, float]:
    """Whether ``k`` exceeds ``(3 + sqrt(33))/4``, the range where the decay argument closes."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return k > FEASIBILITY_THRESHOLD, FEASIBILITY_THRESHOLD


@dataclass(frozen=True)
class ScatterConfig:
    k: int
    delta: float = 0.05
    checkpoints: tuple = (2.0, 4.0, 8.0, 16.0)
    decay_checkpoints: tuple = (10.0, 20.0, 40.0)
    tail_ratio: float = 0.9
    decay_ratio: float = 1.1
    slope_slack: float = 0.3
    fit_from: float = 2.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 3:
            raise ValueError(f"scattering diagnostics need an integer k >= 3, got {self.k}")
        object.__setattr__(self, "checkpoints", tuple(float(t) for t in self.checkpoints))
        object.__setattr__(self, "decay_checkpoints", tuple(float(t) for t in self.decay_checkpoints))

    @property
    def p(self) -> float:
        return 2.0 * (self.k + 1)

    @property
    def p_conj(self) -> float:
        return 2.0 * (self.k + 1) / (2 * self.k + 1)

    @property
    def theta(self) -> float:
        return self.k / (self.k + 1)

    @property
    def rate(self) -> float:
        """``2 theta / 3``."""
        return 2.0 * self.theta / 3.0

    @property
    def hamiltonian_rate(self) -> float:
        """``2k/3``, the decay rate of the potential term."""
        return 2.0 * self.k / 3.0


def smallness(u0: Field, cfg: ScatterConfig) -> float:
    """``||u0||_{L^p'} + ||u0||_{H^1}``."""
    return lp_norm(u0, cfg.p_conj) + h1_norm(u0)


def interaction_picture(traj: Trajectory) -> Trajectory:
    """``v(t) = U(-t) u(t)`` at every snapshot."""
    return Trajectory.from_snapshots([(t, propagate(f, -t)) for t, f in traj.snapshots])


def _index_at(traj: Trajectory, t: float, tol: float = 1e-9) -> int:
    i = int(np.argmin(np.abs(traj.times - t)))
    if abs(traj.times[i] - t) > tol * max(1.0, abs(t)):
        raise ValueError(f"no snapshot at t = {t:g} (nearest {traj.times[i]:g})")
    return i


@dataclass
class ScatterState:
    f_plus: Field
    checkpoints: list
    tail_norms: list
    tail_ratios: list
    cauchy: bool
    verdict: str
    window: float


def asymptotic_state(traj: Trajectory, cfg: ScatterConfig, horizon_c: float = 2.0) -> ScatterState:
    """Approximate ``f_+`` by ``v`` at the last checkpoint and certify with the Cauchy tail.

    ``tail_norms[i] = ||v(t_(i+1)) - v(t_i)||_{H^1}``.  The verdict is
    ``"cauchy"`` when the tails decrease strictly with every successive
    ratio at most ``cfg.tail_ratio``; otherwise ``"no convergence detected"``.
    """
    window = validity_horizon(traj.at(0), horizon_c)
    ts = [t for t in cfg.checkpoints if t <= traj.times[-1] + 1e-12]
    vs = [propagate(traj.at(_index_at(traj, t)), -t) for t in ts]
    tails = [h1_norm(b - a) for a, b in zip(vs, vs[1:])]
    ratios = [b / a if a > 0 else math.inf for a, b in zip(tails, tails[1:])]
    cauchy = len(tails) >= 2 and all(r <= cfg.tail_ratio for r in ratios)
    if not tails:
        verdict = "insufficient checkpoints"
    elif max(tails) == 0.0:
        cauchy, verdict = True, "cauchy"
    else:
        verdict = "cauchy" if cauchy else "no convergence detected"
    if ts and ts[-1] > window:
        verdict += f" (beyond validity window {window:.3g})"
    return ScatterState(vs[-1] if vs else traj.at(0), ts, tails, ratios, cauchy, verdict, window)


@dataclass
class DecayReport:
    checkpoints: list
    M_T: list
    ratios: list
    stable: bool
    window: float
    partial: bool
    weighted: np.ndarray = field(repr=False, default=None)


def weighted_decay(traj: Trajectory, cfg: ScatterConfig, horizon_c: float = 2.0) -> DecayReport:
    """``M(T) = sup_{t <= T} (1 + t)^(2 theta/3) ||u(t)||_{L^p}`` at each decay checkpoint."""
    window = validity_horizon(traj.at(0), horizon_c)
    times = traj.times
    w = np.array([(1.0 + t) ** cfg.rate * lp_norm(traj.at(i), cfg.p) for i, t in enumerate(times)])
    Ts = [T for T in cfg.decay_checkpoints if T <= times[-1] + 1e-12]
    M = [float(np.max(w[times <= T + 1e-12])) for T in Ts]
    ratios = [b / a if a > 0 else (1.0 if b == 0 else math.inf) for a, b in zip(M, M[1:])]
    partial = len(Ts) < len(cfg.decay_checkpoints) or any(T > window for T in Ts)
    stable = len(Ts) >= 2 and all(r <= cfg.decay_ratio for r in ratios)
    return DecayReport(Ts, M, ratios, stable, window, partial, w)


@dataclass
class HamiltonianTail:
    times: np.ndarray
    G: np.ndarray
    slope: float
    target: float
    passed: bool


def hamiltonian_tail(traj: Trajectory, k: int, fit_from: float = 2.0, slack: float = 0.3) -> HamiltonianTail:
    """``G(u(t)) = int u^(k+2) / (k+2)`` and its log-log decay slope.

    The slope is fitted to ``|G|`` over snapshots with ``t >= fit_from``;
    the verdict asks for ``slope <= -2k/3 + slack``.
    """
    times = traj.times
    G = np.array([power_integral(traj.at(i), k + 2) / (k + 2) for i in range(len(times))])
    target = -2.0 * k / 3.0
    sel = (times >= fit_from) & (np.abs(G) > 0)
    if np.count_nonzero(sel) < 2:
        return HamiltonianTail(times, G, 0.0 if not np.any(G) else math.nan, target, not np.any(G))
    slope = float(np.polyfit(np.log(times[sel]), np.log(np.abs(G[sel])), 1)[0])
    return HamiltonianTail(times, G, slope, target, slope <= target + slack)


def scatter_report(
    u0: Field, traj: Trajectory, cfg: ScatterConfig, horizon_c: float = 2.0
) -> tuple[dict, ScatterState]:
    """Run the three diagnostics and assemble the JSON report."""
    state = asymptotic_state(traj, cfg, horizon_c)
    decay = weighted_decay(traj, cfg, horizon_c)
    ham = hamiltonian_tail(traj, cfg.k, cfg.fit_from, cfg.slope_slack)
    measured = smallness(u0, cfg)
    report = {
        "k": cfg.k,
        "delta": cfg.delta,
        "measured_delta": measured,
        "checkpoints": state.checkpoints,
        "tail_norms": state.tail_norms,
        "tail_ratios": state.tail_ratios,
        "decay_checkpoints": decay.checkpoints,
        "M_T": decay.M_T,
        "G_slope": ham.slope,
        "validity_window": state.window,
        "verdicts": {
            "small_data": measured < cfg.delta,
            "cauchy": state.cauchy,
            "asymptotic_state": state.verdict,
            "weighted_decay_stable": decay.stable,
            "weighted_decay_partial": decay.partial,
            "hamiltonian_tail": ham.passed,
        },
    }
    return report, state


def amplitude_for_delta(profile: Field, cfg: ScatterConfig, delta: float) -> float:
    """Amplitude ``c`` with ``smallness(c * profile) = delta`` (both norms are 1-homogeneous)."""
    base = smallness(profile, cfg)
    if base == 0:
        raise ValueError("zero profile")
    return delta / base


def linear_trajectory(u0: Field, times: Sequence[float]) -> Trajectory:
    return Trajectory.from_snapshots([(float(t), propagate(u0, float(t))) for t in times])
