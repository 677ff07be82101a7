"""Free propagator of the linearised flow and probes of its estimates.

``U(t)`` multiplies the spectrum by ``exp(i t (xi^3 + xi eta^2))``.  The
probes below do not prove anything: they evaluate both sides of a linear
estimate over a structured family of data and report how the ratio
behaves (bounded versus growing).  On the torus a wave packet re-enters
the box after crossing it, so every probe checks a validity horizon first.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calculus import (
    INF,
    NormTriple,
    boundary_fraction,
    fractional_dx,
    l2_norm,
    lp_norm,
    mixed_norm_array,
    sobolev_norm,
)
from .grid import Field, GridSpec, irfft, rfft


class ValidityError(RuntimeError):
    """Requested times lie beyond the torus validity horizon."""


def propagate_hat(uh: np.ndarray, spec: GridSpec, t: float) -> np.ndarray:
    """Advance a raw rfft array by the linear group."""
    return uh * np.exp(1j * t * spec.dispersion)


def propagate(f: Field, t: float) -> Field:
    """``U(t) f``; exact on the grid for every ``t``."""
    if t == 0:
        return f
    s = f.spec
    return Field(s, irfft(propagate_hat(rfft(f.samples), s, t), s.n))


def group_speed(f: Field) -> float:
    """Group-speed bound ``3 xi^2 + eta^2`` at the rms frequencies of ``f``."""
    s = f.spec
    a = np.abs(rfft(f.samples)) ** 2 * s.rweights
    total = float(a.sum())
    if total == 0.0:
        return 0.0
    xi2 = float((a * s.kx**2).sum()) / total
    eta2 = float((a * s.ky**2).sum()) / total
    return 3.0 * xi2 + eta2


def validity_horizon(f: Field, c: float = 2.0) -> float:
    """Time before the bulk of ``f`` travels ``c L`` and re-enters the box."""
    v = group_speed(f)
    return math.inf if v == 0 else c * f.spec.L / v


def _check_horizon(fields: Sequence[Field], t_max: float, c: float) -> float:
    horizon = min(validity_horizon(f, c) for f in fields)
    if t_max > horizon:
        raise ValidityError(f"t = {t_max:g} exceeds the torus validity horizon {horizon:.3g}")
    return horizon


# -- pointwise decay -------------------------------------------------------------


@dataclass(frozen=True)
class DecayProbeConfig:
    theta: float
    eps: float = 0.0
    t_min: float = 1.0
    t_max: float = 10.0
    samples: int = 16
    horizon_c: float = 2.0

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        if not 0 <= self.eps < 0.5:
            raise ValueError("eps must lie in [0, 1/2)")
        if not 0 < self.t_min < self.t_max:
            raise ValueError("need 0 < t_min < t_max")
        if self.samples < 8:
            raise ValueError("need at least 8 samples")

    @property
    def p(self) -> float:
        return INF if self.theta == 1 else 2.0 / (1.0 - self.theta)

    @property
    def p_conj(self) -> float:
        return 2.0 / (1.0 + self.theta)

    @property
    def rate(self) -> float:
        """Predicted decay exponent ``theta (2 + eps) / 3``."""
        return self.theta * (2.0 + self.eps) / 3.0


@dataclass
class DecayResult:
    slope: float
    expected: float
    constant: float
    times: np.ndarray
    norms: np.ndarray
    horizon: float
    contaminated: bool
    max_boundary_fraction: float


def decay_probe(f: Field, cfg: DecayProbeConfig, contamination_tol: float = 1e-8) -> DecayResult:
    """Fit the decay exponent of ``||D_x^(theta eps) U(t) f||_{L^p}``.

    Returns the least-squares slope of ``log norm`` against ``log t`` over
    log-spaced samples and the largest observed value of
    ``norm * t^rate / ||f||_{L^p'}``.
    """
    horizon = _check_horizon([f], cfg.t_max, cfg.horizon_c)
    g = f if cfg.theta * cfg.eps == 0 else fractional_dx(f, cfg.theta * cfg.eps)
    s = f.spec
    gh = rfft(g.samples)
    rhs = lp_norm(f, cfg.p_conj)
    times = np.geomspace(cfg.t_min, cfg.t_max, cfg.samples)
    norms = np.empty_like(times)
    worst_edge = 0.0
    for i, t in enumerate(times):
        u = Field(s, irfft(propagate_hat(gh, s, t), s.n))
        norms[i] = lp_norm(u, cfg.p)
        worst_edge = max(worst_edge, boundary_fraction(u))
    slope = float(np.polyfit(np.log(times), np.log(norms), 1)[0])
    const = float(np.max(norms * times**cfg.rate)) / rhs if rhs > 0 else 0.0
    return DecayResult(
        slope=slope,
        expected=-cfg.rate,
        constant=const,
        times=times,
        norms=norms,
        horizon=horizon,
        contaminated=worst_edge > contamination_tol,
        max_boundary_fraction=worst_edge,
    )


# -- space-time estimates -----------------------------------------------------------


@dataclass
class ProbeStats:
    """Both sides of an estimate over a family and their ratio statistics."""

    name: str
    params: list
    lhs: np.ndarray
    rhs: np.ndarray
    horizon: float = math.inf
    extra: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return self.lhs / self.rhs

    @property
    def max(self) -> float:
        return float(self.ratios.max())

    @property
    def min(self) -> float:
        return float(self.ratios.min())

    @property
    def spread(self) -> float:
        """max/min of the ratio over the family."""
        return self.max / self.min

    @property
    def growth_exponent(self) -> float:
        """Log-log slope of the ratio against the (positive) family parameter."""
        p = np.asarray(self.params, dtype=float)
        if p.size < 2:
            return 0.0
        return float(np.polyfit(np.log(p), np.log(self.ratios), 1)[0])

    def rows(self):
        for i, (p, l, r) in enumerate(zip(self.params, self.lhs, self.rhs)):
            yield {"family_index": i, "param": p, "lhs": l, "rhs": r, "ratio": l / r}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["family_index", "param", "lhs", "rhs", "ratio"])
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (f"{v:.12e}" if isinstance(v, float) else v) for k, v in row.items()})


def linear_tensor(f: Field, times: np.ndarray, mult=None) -> np.ndarray:
    """Samples of ``M U(t) f`` for every t, shape ``(nt, n, n)``."""
    s = f.spec
    fh = rfft(f.samples)
    if mult is not None:
        fh = fh * mult
    out = np.empty((len(times), s.n, s.n))
    for i, t in enumerate(times):
        out[i] = irfft(propagate_hat(fh, s, t), s.n)
    return out


def smoothing_probe(
    family: Sequence[Field],
    T: float = 1.0,
    nt: int = 256,
    order: int = 1,
    params: Sequence | None = None,
    horizon_c: float = 2.0,
) -> ProbeStats:
    """``||d_x^order U(t) u0||_{L^inf_x L^2_{yT}}`` against ``||u0||_{L^2}``.

    ``order=1`` is the Kato smoothing estimate; ``order=2`` asks for one
    derivative more than it provides and serves as a control.
    """
    horizon = _check_horizon(family, T, horizon_c)
    times = np.linspace(0.0, T, nt)
    norm = NormTriple((INF, 2, 2), ("x", "y", "T"))
    lhs, rhs = [], []
    for f in family:
        mult = (1j * f.spec.kx_odd) ** order
        lhs.append(mixed_norm_array(linear_tensor(f, times, mult), times, f.spec.dx, norm))
        rhs.append(l2_norm(f))
    return ProbeStats(
        f"smoothing(order={order})",
        list(params) if params is not None else list(range(1, len(family) + 1)),
        np.array(lhs),
        np.array(rhs),
        horizon,
    )


def maximal_probe(
    family: Sequence[Field],
    s: float,
    T: float = 1.0,
    nt: int = 256,
    params: Sequence | None = None,
    horizon_c: float = 2.0,
    clip_to_horizon: bool = False,
) -> ProbeStats:
    """``||U(t) f||_{L^4_x L^inf_{yT}}`` against ``||f||_{H^s}`` on ``[0, T]``.

    With ``clip_to_horizon`` each member is probed on ``[0, min(T, h)]``
    where ``h`` is its own validity horizon.  The estimate holds for every
    ``T <= 1``, so a shorter window is still an instance of it; this lets
    strongly dilated data take part without wrapping around the torus.
    """
    windows = []
    for f in family:
        h = validity_horizon(f, horizon_c)
        if T > h and not clip_to_horizon:
            raise ValidityError(f"t = {T:g} exceeds the torus validity horizon {h:.3g}")
        windows.append(min(T, h))
    norm = NormTriple((4, INF, INF), ("x", "y", "T"))
    lhs = []
    for f, w in zip(family, windows):
        times = np.linspace(0.0, w, nt)
        lhs.append(mixed_norm_array(linear_tensor(f, times), times, f.spec.dx, norm))
    rhs = [sobolev_norm(f, s) for f in family]
    return ProbeStats(
        f"maximal(s={s:g})",
        list(params) if params is not None else list(range(1, len(family) + 1)),
        np.array(lhs),
        np.array(rhs),
        min(validity_horizon(f, horizon_c) for f in family),
        {"windows": windows},
    )


def strichartz_exponents(theta: float, eps: float) -> tuple[float, float]:
    """``(q, p)`` with ``p = 2/(1-theta)`` and ``2/q = theta (2 + eps)/3``."""
    p = INF if theta == 1 else 2.0 / (1.0 - theta)
    q = INF if theta == 0 else 6.0 / (theta * (2.0 + eps))
    return q, p


def strichartz_probe(
    family: Sequence[Field],
    theta: float,
    eps: float = 0.0,
    T: float = 1.0,
    nt: int = 256,
    params: Sequence | None = None,
    horizon_c: float = 2.0,
) -> ProbeStats:
    """``||D_x^(theta eps/2) U(t) f||_{L^q_T L^p_{xy}}`` against ``||f||_{L^2}``."""
    if not 0 <= theta <= 1 or not 0 <= eps < 0.5:
        raise ValueError("need 0 <= theta <= 1 and 0 <= eps < 1/2")
    horizon = _check_horizon(family, T, horizon_c)
    q, p = strichartz_exponents(theta, eps)
    times = np.linspace(0.0, T, nt)
    norm = NormTriple((q, p, p), ("T", "x", "y"))
    alpha = theta * eps / 2.0
    lhs, rhs = [], []
    for f in family:
        mult = np.abs(f.spec.kx) ** alpha if alpha > 0 else None
        lhs.append(mixed_norm_array(linear_tensor(f, times, mult), times, f.spec.dx, norm))
        rhs.append(l2_norm(f))
    return ProbeStats(
        f"strichartz(theta={theta:g}, eps={eps:g})",
        list(params) if params is not None else list(range(1, len(family) + 1)),
        np.array(lhs),
        np.array(rhs),
        horizon,
        {"q": q, "p": p},
    )


def local_theory_probe(
    family: Sequence[Field],
    k: int,
    which: str,
    T: float = 1.0,
    nt: int = 256,
    eps: float = 0.01,
    params: Sequence | None = None,
    horizon_c: float = 2.0,
) -> ProbeStats:
    """Probes of the three linear estimates behind the local theory for k > 8.

    ``which="i"``: ``L^{k/2}_x L^inf_{yT}`` against ``H^{s_k+}``;
    ``"ii"``: ``L^{3k/2+}_T L^inf_{xy}`` against ``H^{s_k+}``;
    ``"iii"``: ``||d_x U(t) f||_{L^{3k/(k+2)}_T L^inf_{xy}}`` against
    ``||D_x^{s_k} f||_{L^2}``.
    """
    sk = 1.0 - 2.0 / k
    horizon = _check_horizon(family, T, horizon_c)
    times = np.linspace(0.0, T, nt)
    lhs, rhs = [], []
    for f in family:
        if which == "i":
            norm = NormTriple((k / 2.0, INF, INF), ("x", "y", "T"))
            lhs.append(mixed_norm_array(linear_tensor(f, times), times, f.spec.dx, norm))
            rhs.append(sobolev_norm(f, sk + eps))
        elif which == "ii":
            norm = NormTriple((1.5 * k + eps, INF, INF), ("T", "x", "y"))
            lhs.append(mixed_norm_array(linear_tensor(f, times), times, f.spec.dx, norm))
            rhs.append(sobolev_norm(f, sk + eps))
        elif which == "iii":
            norm = NormTriple((3.0 * k / (k + 2), INF, INF), ("T", "x", "y"))
            mult = 1j * f.spec.kx_odd
            lhs.append(mixed_norm_array(linear_tensor(f, times, mult), times, f.spec.dx, norm))
            rhs.append(l2_norm(fractional_dx(f, sk)))
        else:
            raise ValueError(f"which must be 'i', 'ii' or 'iii', got {which!r}")
    return ProbeStats(
        f"local({which}, k={k})",
        list(params) if params is not None else list(range(1, len(family) + 1)),
        np.array(lhs),
        np.array(rhs),
        horizon,
    )


# -- probe families ----------------------------------------------------------------


def _normalised(f: Field) -> Field:
    return f * (1.0 / l2_norm(f))


def gaussian(spec: GridSpec, amp: float = 1.0, width: float = 1.0, x0: float = 0.0, y0: float = 0.0) -> Field:
    X, Y = spec.mesh
    return Field(spec, amp * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2.0 * width**2)))


def modulated_family(spec: GridSpec, freqs: Sequence[float], width: float) -> list[Field]:
    """``cos(lam x) g`` for a fixed Gaussian envelope, L^2-normalised."""
    X, Y = spec.mesh
    g = np.exp(-(X**2 + Y**2) / (2.0 * width**2))
    return [_normalised(Field(spec, np.cos(lam * X) * g)) for lam in freqs]


def dilated_family(spec: GridSpec, scales: Sequence[float], width: float, carrier: float = 1.0) -> list[Field]:
    """``cos(N carrier x) g(N x, N y)``: one modulated Gaussian, dilated by N."""
    X, Y = spec.mesh
    out = []
    for N in scales:
        g = np.exp(-(N**2) * (X**2 + Y**2) / (2.0 * width**2))
        out.append(_normalised(Field(spec, np.cos(N * carrier * X) * g)))
    return out


def random_bandlimited_family(
    spec: GridSpec, count: int, kmax: float, width: float, seed: int = 0
) -> list[Field]:
    """Random spectra inside the disc ``|k| <= kmax`` under a Gaussian window."""
    rng = np.random.default_rng(seed)
    X, Y = spec.mesh
    window = np.exp(-(X**2 + Y**2) / (2.0 * width**2))
    out = []
    for _ in range(count):
        c = rng.standard_normal(spec.k2.shape) + 1j * rng.standard_normal(spec.k2.shape)
        c[spec.k2 > kmax**2] = 0.0
        u = irfft(c * spec.nyquist_free, spec.n) * window
        out.append(_normalised(Field(spec, u)))
    return out
