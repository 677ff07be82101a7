"""Sharp global-existence thresholds and the dichotomy curve.

For ``k >= 3`` data with ``E(u0) >= 0`` and

    E(u0)^s M(u0)^(1-s) < E(Q)^s M(Q)^(1-s),
    ||grad u0||^s ||u0||^(1-s) < ||grad Q||^s ||Q||^(1-s),     s = s_k = 1 - 2/k,

the second inequality persists for all times.  The argument runs through
``X(t) = ||grad u(t)||^2``, which obeys ``X - B X^(k/2) <= A`` with
``A = 2 E(u0)`` and ``B = (2/k)^(k/2) ||u0||^2 / ||Q||^k``.  The curve
``f(x) = x - B x^(k/2)`` peaks at ``x0 = (2/(k B))^(2/(k-2))`` with value
``f(x0) = (k-2)/k x0``, and the two conditions above are exactly
``A < f(x0)`` and ``X(0) < x0``.

For ``k = 2`` both conditions collapse to ``||u0|| < ||Q||``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .calculus import energy, grad_sq, mass
from .evolve import ConservedLedger
from .grid import Field
from .groundstate import GroundState


def s_k(k: int) -> Fraction:
    """Scale-critical Sobolev index ``1 - 2/k``."""
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    return 1 - Fraction(2, int(k))


def s_k_star(k: int) -> Fraction:
    """``1 - 3/(2k - 4)``; undefined for ``k < 3``."""
    if int(k) != k or k < 3:
        raise ValueError(f"s_k^* is only defined for integers k >= 3, got {k}")
    return 1 - Fraction(3, 2 * int(k) - 4)


@dataclass(frozen=True)
class CriticalIndices:
    k: int
    s_k: Fraction
    s_k_star: Fraction

    @property
    def star_exceeds(self) -> bool:
        return self.s_k_star > self.s_k

    @property
    def coincide(self) -> bool:
        return self.s_k_star == self.s_k

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "s_k": str(self.s_k),
            "s_k_star": str(self.s_k_star),
            "s_k_float": float(self.s_k),
            "s_k_star_float": float(self.s_k_star),
            "star_exceeds": self.star_exceeds,
        }


def critical_indices(k: int) -> CriticalIndices:
    """Exact rational ``s_k`` and ``s_k^*``."""
    return CriticalIndices(int(k), s_k(k), s_k_star(k))


# -- threshold report --------------------------------------------------------------------


@dataclass
class ThresholdReport:
    k: int
    s_k: float
    E_u0: float
    M_u0: float
    lhs_12: float
    rhs_12: float
    lhs_13: float
    rhs_13: float
    cond_12: bool
    cond_13: bool
    energy_nonneg: bool

    @property
    def passes(self) -> bool:
        return self.cond_12 and self.cond_13

    def to_json(self) -> dict:
        return asdict(self)


def _mixed(a: float, b: float, s: float) -> float:
    """``a^s b^(1-s)`` with ``0^s = 0`` for ``s > 0``."""
    return (a**s if a > 0 else 0.0) * b ** (1.0 - s)


def threshold_check(u0: Field, k: int, g: GroundState) -> ThresholdReport:
    """Both sides of the energy and gradient conditions for ``u0``.

    ``k = 2`` uses the mass criterion ``||u0|| < ||Q||`` for both flags.
    """
    if g.k != k:
        raise ValueError(f"ground state is for k = {g.k}, not k = {k}")
    if k < 2:
        raise ValueError("threshold conditions need k >= 2")
    E, M, G = energy(u0, k), mass(u0), grad_sq(u0)
    EQ = 0.5 * g.grad_sq - g.pk2_integral / (k + 2)
    MQ, GQ = g.mass_Q, g.grad_sq
    if k == 2:
        ok = math.sqrt(M) < math.sqrt(MQ)
        return ThresholdReport(
            k=2, s_k=0.0, E_u0=E, M_u0=M,
            lhs_12=M, rhs_12=MQ, lhs_13=math.sqrt(M), rhs_13=math.sqrt(MQ),
            cond_12=ok, cond_13=ok, energy_nonneg=E >= 0,
        )
    s = float(s_k(k))
    lhs12 = _mixed(E, M, s) if E >= 0 else -_mixed(-E, M, s)
    rhs12 = _mixed(EQ, MQ, s)
    lhs13 = _mixed(math.sqrt(G), math.sqrt(M), s)
    rhs13 = _mixed(math.sqrt(GQ), math.sqrt(MQ), s)
    return ThresholdReport(
        k=k, s_k=s, E_u0=E, M_u0=M,
        lhs_12=lhs12, rhs_12=rhs12, lhs_13=lhs13, rhs_13=rhs13,
        cond_12=E >= 0 and lhs12 < rhs12,
        cond_13=lhs13 < rhs13,
        energy_nonneg=E >= 0,
    )


# -- dichotomy curve ---------------------------------------------------------------------


@dataclass
class DichotomyCurve:
    k: int
    A: float
    B: float
    x0: float
    f_x0: float
    X0: float
    curve_condition: bool
    """``A < f(x0)`` and ``X(0) < x0``."""
    threshold_condition: bool
    """``cond_12 and cond_13`` from the threshold report."""

    @property
    def agrees(self) -> bool:
        return self.curve_condition == self.threshold_condition

    def f(self, x: float) -> float:
        return x - self.B * x ** (self.k / 2.0)

    def identity_gap(self) -> float:
        """``|f_x0 - f(x0)|`` relative to ``max(|f_x0|, tiny)``."""
        return abs(self.f_x0 - self.f(self.x0)) / max(abs(self.f_x0), 1e-300)

    def to_json(self) -> dict:
        return {**asdict(self), "agrees": self.agrees}


def dichotomy_curve(u0: Field, k: int, g: GroundState) -> DichotomyCurve:
    if k < 3:
        raise ValueError("the dichotomy curve needs k >= 3")
    M = mass(u0)
    if M == 0.0:
        raise ValueError("the dichotomy curve is undefined for zero data")
    rep = threshold_check(u0, k, g)
    A = 2.0 * rep.E_u0
    B = (2.0 / k) ** (k / 2.0) * M / g.mass_Q ** (k / 2.0)
    x0 = (2.0 / (k * B)) ** (2.0 / (k - 2))
    f_x0 = (k - 2) / k * x0
    X0 = grad_sq(u0)
    return DichotomyCurve(
        k=k, A=A, B=B, x0=x0, f_x0=f_x0, X0=X0,
        curve_condition=A < f_x0 and X0 < x0,
        threshold_condition=rep.passes,
    )


# -- trap monitor ------------------------------------------------------------------------


@dataclass
class TrapVerdict:
    passed: bool
    min_margin: float
    first_violation: float | None
    bound_slack: float | None = None
    """``min_t (A + tol - (X - B X^(k/2)))``; negative means the a-priori bound failed."""
    bound_violation: float | None = None
    reason: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def trap_monitor(
    ledger: ConservedLedger,
    report: ThresholdReport,
    curve: DichotomyCurve | None = None,
    bound_tol: float = 1e-6,
) -> TrapVerdict:
    """Check ``trap_lhs(t) < rhs_13`` on every row (and the a-priori bound when ``curve`` is given)."""
    rows = ledger.rows
    margins = [report.rhs_13 - r["trap_lhs"] for r in rows]
    min_margin = min(margins, default=report.rhs_13)
    first = next((r["t"] for r, m in zip(rows, margins) if not m > 0), None)
    slack = None
    bound_first = None
    if curve is not None:
        half = curve.k / 2.0
        slacks = [curve.A + bound_tol - (r["grad_l2"] ** 2 - curve.B * r["grad_l2"] ** (2 * half)) for r in rows]
        slack = min(slacks, default=curve.A + bound_tol) - bound_tol
        bound_first = next((r["t"] for r, s in zip(rows, slacks) if s < 0), None)
    reasons = []
    if first is not None:
        reasons.append(f"trap violated at t = {first:g}")
    if bound_first is not None:
        reasons.append(f"a-priori bound violated at t = {bound_first:g}")
    if not report.passes:
        reasons.append("initial data does not satisfy the threshold conditions")
    return TrapVerdict(
        passed=not reasons,
        min_margin=min_margin,
        first_violation=first,
        bound_slack=slack,
        bound_violation=bound_first,
        reason="; ".join(reasons),
    )
