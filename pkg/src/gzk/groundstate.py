"""Ground states, Pohozaev identities and the sharp Gagliardo-Nirenberg constant.

The ground state ``Q`` is the positive radial solution of

    Delta Q - Q + Q^(k+1) = 0,

computed here by Petviashvili's normalised fixed-point iteration.  The
rescaled profile ``psi`` solves ``(k/2) Delta psi - psi + psi^(k+1) = 0``
and satisfies ``Q(x, y) = psi(sqrt(k/2) (x, y))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import zkf
from .calculus import evaluate_at, grad_sq, lp_norm, mass, power_integral
from .grid import Field, GridSpec, ipow, irfft, rfft


class ConvergenceError(RuntimeError):
    """The iteration did not converge; ``history`` holds the residuals."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True, eq=False)
class GroundState:
    k: int
    Q: Field
    mass_Q: float
    grad_sq: float
    pk2_integral: float
    residual: float
    iterations: int
    stabilizer: float = 1.0
    history: tuple = field(default=(), repr=False)

    @classmethod
    def from_field(cls, k: int, Q: Field, residual: float | None = None, iterations: int = 0, **kw):
        res = elliptic_residual(Q, k) if residual is None else residual
        return cls(
            k=k,
            Q=Q,
            mass_Q=mass(Q),
            grad_sq=grad_sq(Q),
            pk2_integral=power_integral(Q, k + 2),
            residual=res,
            iterations=iterations,
            **kw,
        )

    @property
    def norm_Q(self) -> float:
        return math.sqrt(self.mass_Q)

    @property
    def grad_norm(self) -> float:
        return math.sqrt(self.grad_sq)

    def sidecar(self) -> dict:
        return {
            "k": self.k,
            "mass": self.mass_Q,
            "grad_sq": self.grad_sq,
            "pk2": self.pk2_integral,
            "residual": self.residual,
            "iterations": self.iterations,
            "K_opt_pow": sharp_constant_pow(self.k, self.mass_Q),
        }


def elliptic_residual(Q: Field, k: int, scale: float = 1.0) -> float:
    """``||scale Delta Q - Q + Q^(k+1)||_{L^2} / ||Q||_{L^2}`` on the grid."""
    s = Q.spec
    norm = math.sqrt(mass(Q))
    if norm == 0.0:
        raise ValueError("residual of the zero field is undefined")
    lin = irfft(rfft(Q.samples) * (1.0 + scale * s.k2), s.n)
    r = ipow(Q.samples, k + 1) - lin
    return math.sqrt(float(np.sum(r * r)) * s.dx**2) / norm


def _centre(samples: np.ndarray, spec: GridSpec) -> tuple[float, float]:
    """Centre of a single bump read off the phase of the first Fourier modes."""
    c = rfft(samples)
    # with x_i = -L + i dx, a bump at x_c gives c[0, 1] ~ exp(-i pi (x_c + L) / L)
    ax = -np.angle(c[0, 1]) * spec.L / math.pi - spec.L
    ay = -np.angle(c[1, 0]) * spec.L / math.pi - spec.L
    wrap = lambda a: (a + spec.L) % (2 * spec.L) - spec.L  # noqa: E731
    return wrap(ax), wrap(ay)


def petviashvili(
    k: int,
    spec: GridSpec,
    scale: float = 1.0,
    tol: float = 1e-11,
    max_iters: int = 500,
    seed: Field | None = None,
    recentre: bool = True,
) -> GroundState:
    """Solve ``scale Delta u - u + u^(k+1) = 0`` for a positive bump.

    Each step maps ``u`` to ``M^gamma (1 - scale Delta)^(-1) u^(k+1)`` with
    ``gamma = (k+1)/k`` and the stabilising factor
    ``M = <(1 - scale Delta) u, u> / <u^(k+1), u>``.  The iterate is pulled
    back to the box centre so that translated seeds give the same output.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if seed is None:
        seed = Field(spec, np.exp(-spec.r2 / 2.0))
    elif seed.spec != spec:
        raise ValueError("seed lives on a different grid")
    gamma = (k + 1) / k
    sym = 1.0 + scale * spec.k2
    u = np.array(seed.samples)
    start = float(np.sum(u * u))
    if start == 0.0:
        raise ConvergenceError("seed is identically zero", [])
    history: list[float] = []
    M = float("nan")
    for it in range(1, max_iters + 1):
        # (1 - Delta) is even in the frequencies, so Nyquist modes are kept
        uh = rfft(u)
        nh = rfft(ipow(u, k + 1))
        num = float(np.sum((sym * np.abs(uh) ** 2) * spec.rweights))
        den = float(np.sum((np.conj(uh) * nh).real * spec.rweights))
        if not (den > 0 and math.isfinite(num)):
            raise ConvergenceError(f"iteration collapsed at step {it} (M undefined)", history)
        M = num / den
        u = irfft(M**gamma * nh / sym, spec.n)
        size = float(np.sum(u * u))
        if not math.isfinite(size) or size < 1e-20 * start:
            raise ConvergenceError(f"iterate collapsed to zero at step {it}", history)
        if size > 1e20 * start:
            raise ConvergenceError(f"iterate blew up at step {it}", history)
        if recentre:
            xc, yc = _centre(u, spec)
            if max(abs(xc), abs(yc)) > 1e-10 * spec.L:
                u = Field(spec, u).shifted(-xc, -yc).samples
        res = elliptic_residual(Field(spec, u), k, scale)
        history.append(res)
        if res <= tol and abs(M - 1.0) <= max(tol, 1e-12):
            Q = Field(spec, u)
            return GroundState.from_field(
                k, Q, residual=res, iterations=it, stabilizer=M, history=tuple(history)
            )
    raise ConvergenceError(
        f"no convergence after {max_iters} iterations (residual {history[-1]:.3e}, M = {M:.15f})",
        history,
    )


def solve_ground_state(
    k: int,
    spec: GridSpec | None = None,
    tol: float = 1e-11,
    seed_profile: Field | None = None,
    max_iters: int = 500,
) -> GroundState:
    """Ground state of ``Delta Q - Q + Q^(k+1) = 0`` (default grid ``n=256, L=16``)."""
    spec = spec or GridSpec(256, 16.0)
    return petviashvili(k, spec, 1.0, tol, max_iters, seed_profile)


@dataclass(frozen=True, eq=False)
class PsiSolution:
    psi: Field
    Q: Field
    mass_psi: float
    mass_Q: float
    mass_gap: float
    """``|(2/k) ||psi||^2 - ||Q||^2| / ||Q||^2``."""


def solve_psi_and_rescale(
    k: int, spec: GridSpec | None = None, tol: float = 1e-11, max_iters: int = 500
) -> PsiSolution:
    """Solve the ``psi`` equation and map it to ``Q`` on ``spec``.

    ``psi(x) = Q(x / sqrt(k/2))`` is wider than ``Q`` by ``sqrt(k/2)``, so it
    is solved on a box enlarged by that factor (same ``n``) to keep the same
    decay at the edge.  ``Q`` is then the band-limited interpolant of
    ``psi`` evaluated at ``sqrt(k/2)`` times the points of ``spec``.
    """
    spec = spec or GridSpec(256, 16.0)
    a = math.sqrt(k / 2.0)
    pspec = GridSpec(spec.n, spec.L * a)
    sol = petviashvili(k, pspec, k / 2.0, tol, max_iters)
    psi = sol.Q
    pts = a * spec.x
    Q = Field(spec, evaluate_at(psi, pts, pts))
    mp, mq = mass(psi), mass(Q)
    return PsiSolution(psi, Q, mp, mq, abs(2.0 / k * mp - mq) / mq)


# -- identities ------------------------------------------------------------------


@dataclass(frozen=True)
class PohozaevResiduals:
    """Relative residuals of the three integral identities, all divided by P.

    ``P = int Q^(k+2)``, ``M = ||Q||^2``, ``G = ||grad Q||^2``:

    * ``r1 = |P - M - G| / P``
    * ``r2 = |P - (k+2)/2 M| / P``
    * ``r3 = |(k/2) M - G| / P``

    Sharing the denominator makes ``r3 <= r1 + r2`` an exact consequence
    of the triangle inequality.
    """

    r1: float
    r2: float
    r3: float

    @property
    def worst(self) -> float:
        return max(self.r1, self.r2, self.r3)


def pohozaev_check(g: GroundState) -> PohozaevResiduals:
    k, M, G, P = g.k, g.mass_Q, g.grad_sq, g.pk2_integral
    if M == 0.0 or P <= 0.0:
        raise ValueError("not a ground state: the field is zero or has no positive potential term")
    return PohozaevResiduals(
        r1=abs(P - M - G) / P,
        r2=abs(P - 0.5 * (k + 2) * M) / P,
        r3=abs(0.5 * k * M - G) / P,
    )


@dataclass(frozen=True)
class EnergyCheck:
    energy: float
    closed_form: float
    gap: float
    """``|E(Q) - (k-2)/4 M(Q)| / M(Q)``."""


def ground_state_energy(g: GroundState) -> EnergyCheck:
    E = 0.5 * g.grad_sq - g.pk2_integral / (g.k + 2)
    closed = (g.k - 2) / 4.0 * g.mass_Q
    return EnergyCheck(E, closed, abs(E - closed) / g.mass_Q)


def sharp_constant_pow(k: int, mass_Q: float) -> float:
    """``K_opt^(k+2) = 2^((k-2)/2) (k+2) / (k^(k/2) ||Q||^k)``."""
    return 2.0 ** ((k - 2) / 2.0) * (k + 2) / (k ** (k / 2.0) * mass_Q ** (k / 2.0))


def sharp_constant_pow_psi(k: int, mass_psi: float) -> float:
    """``K_opt^(k+2) = (k+2) / (2 ||psi||^k)``."""
    return (k + 2) / (2.0 * mass_psi ** (k / 2.0))


def gn_ratio(u: Field, k: int, K_pow: float) -> float:
    """``||u||_{k+2}^{k+2} / (K^(k+2) ||grad u||^k ||u||^2)``; at most 1 when ``K`` is sharp."""
    num = lp_norm(u, k + 2) ** (k + 2)
    den = K_pow * grad_sq(u) ** (k / 2.0) * mass(u)
    if den == 0.0:
        raise ValueError("ratio undefined for a field with zero gradient")
    return num / den


def gn_test_family(spec: GridSpec, count: int, seed: int = 0, max_bumps: int = 4) -> list[Field]:
    """Random localised fields: sums of a few signed anisotropic Gaussians.

    Bumps are kept well inside the box so the fields behave like data on
    the plane (a periodic field with nonzero mean need not obey the
    inequality).
    """
    rng = np.random.default_rng(seed)
    X, Y = spec.mesh
    out = []
    for _ in range(count):
        u = np.zeros_like(X)
        for _ in range(rng.integers(1, max_bumps + 1)):
            cx, cy = rng.uniform(-0.3, 0.3, size=2) * spec.L
            sx, sy = rng.uniform(0.6, 2.5, size=2)
            amp = rng.uniform(-2.0, 2.0)
            u += amp * np.exp(-((X - cx) ** 2) / (2 * sx**2) - (Y - cy) ** 2 / (2 * sy**2))
        out.append(Field(spec, u))
    return out


@dataclass
class GNReport:
    k: int
    K_opt_pow: float
    K_opt_pow_psi: float
    formula_gap: float
    equality_gap_at_Q: float
    worst_violation: float
    ratios: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("ratios")
        return d


def sharp_constant(g: GroundState, mass_psi: float | None = None, family=None) -> GNReport:
    """Evaluate the constant both ways and audit the inequality.

    ``mass_psi`` defaults to ``(k/2) ||Q||^2``; pass the mass of an actual
    ``psi`` solve to compare independent computations.  ``family`` defaults
    to 50 random localised fields on the ground-state grid.
    """
    k = g.k
    Kq = sharp_constant_pow(k, g.mass_Q)
    mp = 0.5 * k * g.mass_Q if mass_psi is None else mass_psi
    Kp = sharp_constant_pow_psi(k, mp)
    if family is None:
        family = gn_test_family(g.Q.spec, 50)
    ratios = [gn_ratio(u, k, Kq) for u in family]
    at_Q = g.pk2_integral / (Kq * g.grad_sq ** (k / 2.0) * g.mass_Q)
    return GNReport(
        k=k,
        K_opt_pow=Kq,
        K_opt_pow_psi=Kp,
        formula_gap=abs(Kq - Kp) / Kq,
        equality_gap_at_Q=abs(1.0 - at_Q),
        worst_violation=max(0.0, max(ratios, default=0.0) - 1.0),
        ratios=ratios,
    )


# -- persistence ---------------------------------------------------------------------


def save(g: GroundState, path) -> tuple[Path, Path]:
    """Write ``<path>`` (ZKF1) and ``<path>.json`` (sidecar)."""
    path = Path(path)
    zkf.write(path, g.Q, k=g.k)
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(g.sidecar(), indent=2, sort_keys=True) + "\n")
    return path, side


def load(path) -> GroundState:
    path = Path(path)
    Q, header = zkf.read(path)
    side = json.loads(path.with_name(path.name + ".json").read_text())
    return GroundState(
        k=int(side["k"]),
        Q=Q,
        mass_Q=float(side["mass"]),
        grad_sq=float(side["grad_sq"]),
        pk2_integral=float(side["pk2"]),
        residual=float(side["residual"]),
        iterations=int(side["iterations"]),
    )
