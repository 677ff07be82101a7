"""Time integration of ``u_t + d_x Delta u + d_x(u^(k+1)) = 0`` with auditing.

The linear part is integrated exactly by the group ``U(t)``; classical RK4
is applied to the interaction-picture variable ``w(t) = U(-t) u(t)``
(integrating-factor RK4, also called Lawson RK4).  The nonlinearity is
formed on a zero-padded grid so that the truncated (Galerkin) system
conserves mass and energy exactly; the remaining drift is time error.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import zkf
from .calculus import RescaleWarning, Trajectory, boundary_fraction, l2_norm, mass, rescale
from .grid import Field, GridSpec, dealias_mask, ipow, irfft, padded_power, rfft

log = logging.getLogger(__name__)

LEDGER_COLUMNS = ("t", "mass", "energy", "grad_l2", "linf_u", "trap_lhs", "boundary_fraction")


class NonFiniteError(FloatingPointError):
    """NaN or Inf appeared; ``last_valid`` holds the state before the step."""

    def __init__(self, message: str, last_valid: Field | None = None, t: float | None = None):
        super().__init__(message)
        self.last_valid = last_valid
        self.t = t


class StepBudgetError(ValueError):
    """The time step exceeds the explicit stability budget of the nonlinearity."""


@dataclass(frozen=True)
class EvolveConfig:
    k: int
    dt: float
    T_end: float
    dealias_pad: Fraction | None = None
    dealias_mode: str = "pad"
    snapshot_stride: int = 100
    boundary_tolerance: float = 1e-6
    growth_factor: float = 1e6
    budget_safety: float = 1.0
    keep_snapshots: bool = True

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.dt > 0 or not self.T_end > 0:
            raise ValueError("dt and T_end must be positive")
        if self.dealias_mode not in ("pad", "two-thirds"):
            raise ValueError(f"dealias_mode must be 'pad' or 'two-thirds', got {self.dealias_mode!r}")
        pad = Fraction(math.ceil((self.k + 2) / 2)) if self.dealias_pad is None else Fraction(self.dealias_pad)
        if pad < 1:
            raise ValueError("dealias_pad must be >= 1")
        object.__setattr__(self, "dealias_pad", pad)
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    @property
    def steps(self) -> int:
        return max(1, round(self.T_end / self.dt))


# -- ledger -------------------------------------------------------------------------


@dataclass
class ConservedLedger:
    """Per-snapshot diagnostics; ``status`` is ``"ok"``, ``"boundary"``, ``"growth"`` or ``"nonfinite"``."""

    k: int
    rows: list[dict] = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    def append(self, row: dict) -> None:
        if self.rows and not row["t"] > self.rows[-1]["t"]:
            raise ValueError("ledger times must be strictly increasing")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def drift(self, name: str, floor: float = 1e-10) -> float:
        """``max_t |q(t) - q(0)| / max(|q(0)|, floor)``."""
        q = self.column(name)
        if q.size == 0:
            return 0.0
        return float(np.max(np.abs(q - q[0]))) / max(abs(q[0]), floor)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LEDGER_COLUMNS)
            for r in self.rows:
                w.writerow([f"{r[c]:.12e}" for c in LEDGER_COLUMNS])
        return path

    @classmethod
    def from_csv(cls, path, k: int) -> "ConservedLedger":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != LEDGER_COLUMNS:
                raise ValueError(f"unexpected ledger header {reader.fieldnames}")
            rows = [{c: float(r[c]) for c in LEDGER_COLUMNS} for r in reader]
        led = cls(k)
        for r in rows:
            led.append(r)
        return led


def trap_functional(grad_l2: float, l2: float, k: int) -> float:
    """``||grad u||^(s_k) ||u||^(1 - s_k)`` with ``s_k = 1 - 2/k``."""
    sk = 1.0 - 2.0 / k
    return grad_l2**sk * l2 ** (1.0 - sk)


class _Diagnostics:
    """Conserved quantities from a raw rfft array (one extra transform for the power)."""

    def __init__(self, spec: GridSpec, k: int):
        self.spec, self.k = spec, k

    def row(self, t: float, uh: np.ndarray, u: np.ndarray) -> dict:
        s, k = self.spec, self.k
        m = s.spectral_sum(None, uh)
        g = s.spectral_sum(s.k2, uh)
        pk = float(np.sum(ipow(u, k + 2))) * s.dx**2
        return {
            "t": float(t),
            "mass": m,
            "energy": 0.5 * g - pk / (k + 2),
            "grad_l2": math.sqrt(g),
            "linf_u": float(np.max(np.abs(u))),
            "trap_lhs": trap_functional(math.sqrt(g), math.sqrt(m), k),
            "boundary_fraction": boundary_fraction(Field(s, u)),
        }


# -- right-hand side and stepping -------------------------------------------------------


class Stepper:
    """Integrating-factor RK4 on the rfft half spectrum of one grid."""

    def __init__(self, spec: GridSpec, cfg: EvolveConfig, sign: float = 1.0):
        self.spec, self.cfg = spec, cfg
        self.sign = sign  # -1 integrates the time-reversed equation
        n = spec.n
        if cfg.dealias_mode == "pad":
            self.mask = spec.nyquist_free
        else:
            full = dealias_mask(spec, Fraction(3, 2))
            self.mask = full[:, : n // 2 + 1] & spec.nyquist_free
        self.dx_mult = 1j * spec.kx_odd
        self._phase_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def nonlinear_hat(self, uh: np.ndarray) -> np.ndarray:
        """Half spectrum of ``-d_x(u^(k+1))`` for state ``uh`` (raw rfft)."""
        cfg, s = self.cfg, self.spec
        if cfg.dealias_mode == "pad":
            p = padded_power(uh, s.n, cfg.k + 1, cfg.dealias_pad)
        else:
            p = rfft(ipow(irfft(uh, s.n), cfg.k + 1))
        return -self.sign * self.dx_mult * p * self.mask

    def phases(self, dt: float):
        if dt not in self._phase_cache:
            w = self.sign * self.spec.dispersion
            self._phase_cache = {dt: (np.exp(1j * dt * w), np.exp(0.5j * dt * w))}
        return self._phase_cache[dt]

    def step_hat(self, uh: np.ndarray, dt: float) -> np.ndarray:
        E, Eh = self.phases(dt)
        N = self.nonlinear_hat
        k1 = N(uh)
        k2 = N(Eh * (uh + 0.5 * dt * k1))
        k3 = N(Eh * uh + 0.5 * dt * k2)
        k4 = N(E * uh + dt * Eh * k3)
        return E * uh + (dt / 6.0) * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)

    def project(self, u: np.ndarray) -> np.ndarray:
        return rfft(u) * self.mask


def rhs_nonlinear(u: Field, k: int, pad=None) -> Field:
    """``-d_x(u^(k+1))`` with the power formed on a zero-padded grid."""
    cfg = EvolveConfig(k=k, dt=1.0, T_end=1.0, dealias_pad=pad)
    st = Stepper(u.spec, cfg)
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = st.nonlinear_hat(st.project(u.samples))
        except FloatingPointError as exc:
            peak = float(np.max(np.abs(u.samples)))
            raise OverflowError(f"u^{k + 1} overflowed (max |u| = {peak:.3e})") from exc
    return Field(u.spec, irfft(out, u.spec.n))


def step_budget(u: Field, k: int) -> float:
    """Largest step allowed by ``dt <= dx / ((k+1) max|u|^k)``."""
    peak = float(np.max(np.abs(u.samples)))
    if peak == 0.0:
        return math.inf
    return u.spec.dx / ((k + 1) * peak**k)


def step(u: Field, dt: float, cfg: EvolveConfig, reverse: bool = False) -> Field:
    """One integrating-factor RK4 step; ``reverse`` integrates the time-reversed equation."""
    st = Stepper(u.spec, cfg, -1.0 if reverse else 1.0)
    out = irfft(st.step_hat(st.project(u.samples), dt), u.spec.n)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite values after one step", last_valid=u)
    return Field(u.spec, out)


# -- driver ---------------------------------------------------------------------------------


@dataclass
class EvolveResult:
    trajectory: Trajectory | None
    ledger: ConservedLedger
    final: Field
    t_final: float


def evolve(u0: Field, cfg: EvolveConfig, snapshot_dir=None, check_budget: bool = True) -> EvolveResult:
    """Integrate to ``cfg.T_end``, recording a ledger row every ``snapshot_stride`` steps.

    Stops early (flagging ``ledger.status``) when the boundary share of the
    mass exceeds ``cfg.boundary_tolerance`` or the squared gradient grows
    beyond ``cfg.growth_factor`` times its initial value.  Growth is reported
    as "growth", never as blow-up.
    """
    spec, k = u0.spec, cfg.k
    bf0 = boundary_fraction(u0)
    if bf0 > cfg.boundary_tolerance:
        raise ValueError(
            f"initial boundary fraction {bf0:.3e} exceeds tolerance {cfg.boundary_tolerance:.1e}"
        )
    if check_budget:
        limit = cfg.budget_safety * step_budget(u0, k)
        if cfg.dt > limit:
            raise StepBudgetError(f"dt = {cfg.dt:g} exceeds the nonlinear step budget {limit:.3e}")
    st = Stepper(spec, cfg)
    diag = _Diagnostics(spec, k)
    uh = st.project(u0.samples)
    u = irfft(uh, spec.n)
    ledger = ConservedLedger(k)
    ledger.append(diag.row(0.0, uh, u))
    g0 = ledger.rows[0]["grad_l2"] ** 2
    snaps: list[tuple[float, Field]] = [(0.0, Field(spec, u))]
    snap_dir = Path(snapshot_dir) if snapshot_dir is not None else None
    if snap_dir is not None:
        snap_dir.mkdir(parents=True, exist_ok=True)
        zkf.write(snap_dir / "snap_000000.zkf", snaps[0][1], k, 0.0)

    t = 0.0
    nsteps = cfg.steps
    for i in range(1, nsteps + 1):
        new = st.step_hat(uh, cfg.dt)
        t = i * cfg.dt
        if not np.all(np.isfinite(new)):
            ledger.status = "nonfinite"
            ledger.message = f"non-finite state at t = {t:g}; last valid state kept"
            t -= cfg.dt
            break
        uh = new
        if i % cfg.snapshot_stride and i != nsteps:
            continue
        u = irfft(uh, spec.n)
        row = diag.row(t, uh, u)
        ledger.append(row)
        f = Field(spec, u)
        if cfg.keep_snapshots:
            snaps.append((t, f))
        if snap_dir is not None:
            zkf.write(snap_dir / f"snap_{len(ledger.rows) - 1:06d}.zkf", f, k, t)
        if row["boundary_fraction"] > cfg.boundary_tolerance:
            ledger.status = "boundary"
            ledger.message = f"boundary fraction {row['boundary_fraction']:.3e} at t = {t:g}"
            break
        if g0 > 0 and row["grad_l2"] ** 2 > cfg.growth_factor * g0:
            ledger.status = "growth"
            ledger.message = f"growth observed: |grad u|^2 grew by more than {cfg.growth_factor:g} at t = {t:g}"
            break
    if ledger.status != "ok":
        log.warning(ledger.message)
    final = Field(spec, irfft(uh, spec.n))
    traj = Trajectory.from_snapshots(snaps) if cfg.keep_snapshots and len(snaps) > 1 else None
    return EvolveResult(traj, ledger, final, t)


def linear_solution(u0: Field, t: float) -> Field:
    """``U(t) u0`` projected like the nonlinear state (Nyquist removed)."""
    s = u0.spec
    uh = rfft(u0.samples) * s.nyquist_free
    return Field(s, irfft(uh * np.exp(1j * t * s.dispersion), s.n))


@dataclass
class EquivarianceReport:
    gap: float
    mass_gap: float
    edge_warning: bool


def scaling_equivariance_check(u0: Field, lam: float, k: int, cfg: EvolveConfig, t_bar: float) -> EquivarianceReport:
    """Compare ``rescale(u(lam^3 t_bar))`` with the evolution of ``rescale(u0)`` to ``t_bar``.

    Both runs use ``cfg`` with ``T_end`` replaced and the step scaled so
    that the two runs take the same number of steps (their time grids
    correspond under the scaling).  Returns the relative L^2 gap, the
    mass-law gap ``|M(u_lam(t)) - lam^(4/k-2) M(u(lam^3 t))| / M`` and
    whether either rescaling reached the box edge.
    """
    if lam == 1:
        return EquivarianceReport(0.0, 0.0, False)
    steps = max(1, round(t_bar / cfg.dt))
    long_cfg = replace(cfg, T_end=lam**3 * t_bar, dt=lam**3 * t_bar / steps, snapshot_stride=steps)
    short_cfg = replace(cfg, T_end=t_bar, dt=t_bar / steps, snapshot_stride=steps)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RescaleWarning)
        big = evolve(u0, long_cfg, check_budget=False).final
        lhs = rescale(big, lam, k)
        small0 = rescale(u0, lam, k)
        rhs = evolve(small0, short_cfg, check_budget=False).final
    edge = any(issubclass(w.category, RescaleWarning) for w in caught)
    gap = l2_norm(lhs - rhs) / l2_norm(rhs)
    mass_gap = abs(mass(rhs) - lam ** (4.0 / k - 2.0) * mass(big)) / mass(rhs)
    return EquivarianceReport(gap, mass_gap, edge)

