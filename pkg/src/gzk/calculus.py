"""Norms, functionals, Fourier multipliers and the scaling map."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import Field, GridSpec, ipow, irfft, padded_power, rfft

INF = math.inf
AXES = ("x", "y", "T")


class RescaleWarning(UserWarning):
    """The rescaled field does not decay at the box edge."""


# -- functionals -------------------------------------------------------------


def mass(f: Field) -> float:
    """Quadrature of the integral of u^2."""
    return float(np.sum(f.samples**2)) * f.spec.dx**2


def l2_norm(f: Field) -> float:
    return math.sqrt(mass(f))


def grad_sq(f: Field) -> float:
    """Integral of |grad u|^2 via the multiplier xi^2 + eta^2."""
    s = f.spec
    return s.spectral_sum(s.k2, rfft(f.samples))


def lp_norm(f: Field, p: float) -> float:
    if p == INF:
        return float(np.max(np.abs(f.samples)))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return (float(np.sum(np.abs(f.samples) ** p)) * f.spec.dx**2) ** (1.0 / p)


def power_integral(f: Field, power: int, method: str = "quadrature", pad_ratio=None) -> float:
    """Integral of ``u**power``.

    ``method="quadrature"`` sums grid samples; ``"spectral"`` reads the zero
    mode of the power formed on a zero-padded grid (exact for trigonometric
    polynomials once the padding covers the product degree).
    """
    if method == "quadrature":
        return float(np.sum(ipow(f.samples, power))) * f.spec.dx**2
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    s = f.spec
    if pad_ratio is None:
        pad_ratio = math.ceil((power + 1) / 2)
    uh = rfft(f.samples) * s.nyquist_free
    w = padded_power(uh, s.n, power, pad_ratio)
    return float(w[0, 0].real) * s.dx**2


def energy(f: Field, k: int, method: str = "quadrature") -> float:
    """Half the Dirichlet integral minus the potential term with power k+2."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return 0.5 * grad_sq(f) - power_integral(f, k + 2, method) / (k + 2)


# -- multipliers ---------------------------------------------------------------


def _apply(f: Field, mult) -> Field:
    s = f.spec
    return Field(s, irfft(rfft(f.samples) * mult, s.n))


def partial_x(f: Field) -> Field:
    return _apply(f, 1j * f.spec.kx_odd)


def partial_y(f: Field) -> Field:
    s = f.spec
    ky = s.ky.copy()
    ky[s.n // 2, 0] = 0.0
    return _apply(f, 1j * ky)


def laplacian(f: Field) -> Field:
    return _apply(f, -f.spec.k2)


def fractional_dx(f: Field, s: float) -> Field:
    """Multiply the spectrum by ``|xi|^s``."""
    if not 0 <= s <= 2:
        raise ValueError(f"order must lie in [0, 2], got {s}")
    if s == 0:
        return f
    return _apply(f, np.abs(f.spec.kx) ** s)


def fractional_dy(f: Field, s: float) -> Field:
    """Multiply the spectrum by ``|eta|^s``."""
    if not 0 <= s <= 2:
        raise ValueError(f"order must lie in [0, 2], got {s}")
    if s == 0:
        return f
    return _apply(f, np.abs(f.spec.ky) ** s)


def sobolev_norm(f: Field, s: float, homogeneous: bool = False) -> float:
    """``H^s`` (or homogeneous ``H-dot^s``) norm as a weighted spectral sum.

    The homogeneous weight ``|k|^(2s)`` gives the zero mode weight 0 when
    ``s > 0``; for ``s < 0`` the field must have zero mean.
    """
    if not -2 <= s <= 4:
        raise ValueError(f"s must lie in [-2, 4], got {s}")
    g = f.spec
    uh = rfft(f.samples)
    if homogeneous:
        k2 = g.k2.copy()
        if s == 0:
            w = np.ones_like(k2)
        elif s < 0:
            if abs(uh[0, 0]) > 1e-12 * max(1.0, float(np.max(np.abs(uh)))):
                raise ValueError("homogeneous norm with s < 0 needs a zero-mean field")
            k2[0, 0] = 1.0
            w = k2**s
            w[0, 0] = 0.0
        else:
            w = k2**s
    else:
        w = (1.0 + g.k2) ** s
    return math.sqrt(g.spectral_sum(w, uh))


def h1_norm(f: Field) -> float:
    return math.sqrt(mass(f) + grad_sq(f))


def boundary_fraction(f: Field, band: float = 0.1) -> float:
    """Share of the mass lying within ``band * L`` of the box edge."""
    s = f.spec
    X, Y = s.mesh
    edge = (1.0 - band) * s.L
    strip = (np.abs(X) > edge) | (np.abs(Y) > edge)
    total = float(np.sum(f.samples**2))
    if total == 0.0:
        return 0.0
    return float(np.sum(f.samples[strip] ** 2)) / total


# -- space-time norms ----------------------------------------------------------


@dataclass(frozen=True)
class NormTriple:
    """Exponents of a nested Lebesgue norm, listed outermost to innermost.

    ``exponents[i]`` applies to the axis ``order[i]``; e.g. the norm
    ``L^inf_x L^2_{yT}`` is ``NormTriple((inf, 2, 2), ("x", "y", "T"))``.
    """

    exponents: tuple[float, float, float]
    order: tuple[str, str, str] = ("x", "y", "T")

    def __post_init__(self):
        exps = tuple(float(e) for e in self.exponents)
        if len(exps) != 3 or any(not (e >= 1) for e in exps):
            raise ValueError(f"exponents must be three numbers >= 1, got {self.exponents}")
        if sorted(self.order) != sorted(AXES):
            raise ValueError(f"order must be a permutation of {AXES}, got {self.order}")
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "order", tuple(self.order))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots ``u(t_i)`` on a shared grid; ``data`` has shape ``(nt, n, n)``."""

    spec: GridSpec
    times: np.ndarray
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.data, dtype=float)
        if d.ndim != 3 or d.shape[1:] != (self.spec.n, self.spec.n) or d.shape[0] != t.size:
            raise ValueError(f"data shape {d.shape} does not match {t.size} snapshots on {self.spec}")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "data", d)

    @classmethod
    def from_snapshots(cls, snapshots: Sequence[tuple[float, Field]]) -> "Trajectory":
        if not snapshots:
            raise ValueError("trajectory needs at least one snapshot")
        spec = snapshots[0][1].spec
        for _, f in snapshots:
            if f.spec != spec:
                raise ValueError("all snapshots must share one grid")
        times = np.array([t for t, _ in snapshots], dtype=float)
        return cls(spec, times, np.stack([f.samples for _, f in snapshots]))

    def __len__(self) -> int:
        return self.times.size

    def at(self, i: int) -> Field:
        return Field(self.spec, self.data[i])

    @property
    def snapshots(self) -> list[tuple[float, Field]]:
        return [(float(t), self.at(i)) for i, t in enumerate(self.times)]

    def map(self, func) -> "Trajectory":
        """Apply a Field -> Field map snapshot by snapshot."""
        return Trajectory(
            self.spec, self.times, np.stack([func(self.at(i)).samples for i in range(len(self))])
        )

    def until(self, t_max: float) -> "Trajectory":
        keep = self.times <= t_max * (1 + 1e-12)
        return Trajectory(self.spec, self.times[keep], self.data[keep])


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def mixed_norm_array(u: np.ndarray, times: np.ndarray, dx: float, nt: NormTriple) -> float:
    """Nested norm of a ``(t, y, x)`` tensor.

    Space uses Riemann sums with weight ``dx``, time the trapezoid rule on
    the given (possibly nonuniform) times; infinite exponents are maxima.
    """
    a = np.abs(np.asarray(u, dtype=float))
    if a.shape[0] < 2 and any(ax == "T" and e != INF for ax, e in zip(nt.order, nt.exponents)):
        raise ValueError("a time-integrated norm needs at least 2 snapshots")
    names = ["T", "y", "x"]
    for ax, p in reversed(list(zip(nt.order, nt.exponents))):
        i = names.index(ax)
        if p == INF:
            a = a.max(axis=i)
        else:
            if ax == "T":
                w = trapezoid_weights(times)
            else:
                w = np.full(a.shape[i], dx)
            shape = [1] * a.ndim
            shape[i] = -1
            a = (np.sum(a**p * w.reshape(shape), axis=i)) ** (1.0 / p)
        names.pop(i)
    return float(a)


def mixed_norm(traj: Trajectory, nt: NormTriple) -> float:
    return mixed_norm_array(traj.data, traj.times, traj.spec.dx, nt)


@dataclass(frozen=True)
class ResolutionNorms:
    """The seven space-time norms making up the local-theory solution class."""

    linf_hs: float
    lt_strich_linf: float
    lx_half_k_linf: float
    ux_lt_linf: float
    ux_smoothing: float
    dxs_ux_smoothing: float
    dys_ux_smoothing: float
    exponents: dict

    @property
    def values(self) -> dict:
        return {
            "linf_hs": self.linf_hs,
            "lt_strich_linf": self.lt_strich_linf,
            "lx_half_k_linf": self.lx_half_k_linf,
            "ux_lt_linf": self.ux_lt_linf,
            "ux_smoothing": self.ux_smoothing,
            "dxs_ux_smoothing": self.dxs_ux_smoothing,
            "dys_ux_smoothing": self.dys_ux_smoothing,
        }

    @property
    def total(self) -> float:
        return sum(self.values.values())

    @property
    def finite(self) -> dict:
        return {k: math.isfinite(v) for k, v in self.values.items()}


def norm_exponents(k: int, eps: float = 0.01) -> dict:
    """Time/space exponents of the solution class for a given k."""
    return {"strichartz": 1.5 * k + eps, "ux_time": 3 * k / (k + 2), "maximal_x": k / 2}


def resolution_norms(traj: Trajectory, s: float, k: int, eps: float = 0.01) -> ResolutionNorms:
    """Evaluate the seven norms along a recorded trajectory.

    The smoothing-type norms (``L^inf_x L^2_{yT}``) depend on how densely
    the trajectory was sampled in time; they are diagnostics, not
    convergent quantities.  For k <= 8 the exponent formulas are evaluated
    anyway (k/2 drops below 4 for k < 8).
    """
    ex = norm_exponents(k, eps)
    ux = traj.map(partial_x)
    smoothing = NormTriple((INF, 2, 2), ("x", "y", "T"))
    return ResolutionNorms(
        linf_hs=max(sobolev_norm(f, s) for _, f in traj.snapshots),
        lt_strich_linf=mixed_norm(traj, NormTriple((ex["strichartz"], INF, INF), ("T", "x", "y"))),
        lx_half_k_linf=mixed_norm(traj, NormTriple((max(ex["maximal_x"], 1.0), INF, INF), ("x", "y", "T"))),
        ux_lt_linf=mixed_norm(ux, NormTriple((ex["ux_time"], INF, INF), ("T", "x", "y"))),
        ux_smoothing=mixed_norm(ux, smoothing),
        dxs_ux_smoothing=mixed_norm(ux.map(lambda f: fractional_dx(f, s)), smoothing),
        dys_ux_smoothing=mixed_norm(ux.map(lambda f: fractional_dy(f, s)), smoothing),
        exponents=ex,
    )


# -- scaling -------------------------------------------------------------------


def _eval_matrix(spec: GridSpec, pts: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant at ``pts`` (one axis)."""
    n = spec.n
    phase = np.outer(pts + spec.L, spec.freqs)
    E = np.exp(1j * phase)
    E[:, n // 2] = np.cos(phase[:, n // 2])
    return E


def evaluate_at(f: Field, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Band-limited interpolant on the tensor grid ``xs x ys``.

    Points outside ``[-L, L)`` are treated as zero (decaying data on the
    plane), not as periodic images.  Returns an array indexed ``[iy, ix]``.
    """
    s = f.spec
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    U = np.fft.fft2(f.samples) / s.n**2
    vals = (_eval_matrix(s, ys) @ U @ _eval_matrix(s, xs).T).real
    inside_x = (xs >= -s.L) & (xs < s.L)
    inside_y = (ys >= -s.L) & (ys < s.L)
    return vals * (inside_y[:, None] & inside_x[None, :])


def rescale(f: Field, lam: float, k: int, edge_tol: float = 1e-8) -> Field:
    """``lam^(2/k) f(lam x, lam y)`` sampled on the same grid.

    Warns with :class:`RescaleWarning` when the result is not small at the
    box edge (relative to its maximum), i.e. when the scaled copy no longer
    fits the domain.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if lam == 1:
        return f
    s = f.spec
    pts = lam * s.x
    out = lam ** (2.0 / k) * evaluate_at(f, pts, pts)
    peak = float(np.max(np.abs(out)))
    edge = max(
        np.abs(out[0]).max(), np.abs(out[-1]).max(), np.abs(out[:, 0]).max(), np.abs(out[:, -1]).max()
    )
    if peak > 0 and edge > edge_tol * peak:
        warnings.warn(
            f"rescaled field reaches {edge / peak:.2e} of its peak at the box edge",
            RescaleWarning,
            stacklevel=2,
        )
    return Field(s, out)
