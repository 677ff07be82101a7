"""Periodic grid, unitary Fourier transforms and dealiasing.

The plane is approximated by the torus ``[-L, L)^2`` sampled on an ``n x n``
grid.  Arrays are stored row-major with ``samples[iy, ix] = u(x_ix, y_iy)``,
so axis 0 is ``y`` and axis 1 is ``x``.  Spectra follow numpy FFT ordering on
the same axes: ``coeffs[m, j]`` holds the coefficient at ``(xi_j, eta_m)``.

Spectral coefficients use the unitary convention

    u_hat(xi, eta) = dx^2 / (2 pi) * sum u(x, y) exp(-i (x xi + y eta))

with the physical coordinates ``x = -L + ix*dx``, so that a centred Gaussian
has a real, positive spectrum and Parseval reads
``sum |u|^2 dx^2 == sum |u_hat|^2 (pi/L)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "Field",
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "dealias",
    "dealias_mask",
    "padded_power",
    "pad_size",
    "rfft",
    "irfft",
    "ipow",
]


@dataclass(frozen=True)
class GridSpec:
    """Square periodic grid on ``[-L, L)^2`` with ``n`` points per axis."""

    n: int
    L: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 8, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"box half-length must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def dk(self) -> float:
        """Frequency spacing pi/L."""
        return math.pi / self.L

    @property
    def area(self) -> float:
        return (2.0 * self.L) ** 2

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` coordinate arrays of shape ``(n, n)``."""
        return np.meshgrid(self.x, self.x)

    @cached_property
    def r2(self) -> np.ndarray:
        X, Y = self.mesh
        return X * X + Y * Y

    @cached_property
    def index(self) -> np.ndarray:
        """Integer frequency indices in FFT order, in ``[-n/2, n/2)``."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)

    @cached_property
    def freqs(self) -> np.ndarray:
        """Angular frequencies ``(pi/L) j`` in FFT order."""
        return self.dk * self.index

    @cached_property
    def rfreqs(self) -> np.ndarray:
        """Nonnegative frequencies of the half spectrum (last one is Nyquist)."""
        return self.dk * np.arange(self.n // 2 + 1)

    # -- half-spectrum (rfft layout) multipliers used by the fast paths --------

    @cached_property
    def kx(self) -> np.ndarray:
        """xi on the rfft layout, shape ``(1, n//2+1)``."""
        return self.rfreqs[None, :]

    @cached_property
    def ky(self) -> np.ndarray:
        """eta on the rfft layout, shape ``(n, 1)``."""
        return self.freqs[:, None]

    @cached_property
    def kx_odd(self) -> np.ndarray:
        """xi with the Nyquist column zeroed; used by odd-in-xi symbols."""
        k = self.kx.copy()
        k[0, -1] = 0.0
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def dispersion(self) -> np.ndarray:
        """Symbol ``xi^3 + xi eta^2`` of the linear group on the rfft layout."""
        return self.kx_odd * self.k2

    @cached_property
    def rweights(self) -> np.ndarray:
        """Multiplicity of each rfft column in the full spectrum."""
        w = np.full((1, self.n // 2 + 1), 2.0)
        w[0, 0] = 1.0
        w[0, -1] = 1.0
        return w

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """Boolean rfft-layout mask that is False on the Nyquist row/column."""
        m = np.ones((self.n, self.n // 2 + 1), dtype=bool)
        m[self.n // 2, :] = False
        m[:, -1] = False
        return m

    @cached_property
    def sign(self) -> np.ndarray:
        """``(-1)^(j+m)`` on the full layout; shifts the origin to ``-L``."""
        s = np.where(self.index % 2 == 0, 1.0, -1.0)
        return s[:, None] * s[None, :]

    def spectral_sum(self, weights, uhat_r) -> float:
        """``sum w |u_hat|^2 (pi/L)^2`` evaluated on an rfft array.

        ``uhat_r`` is a raw ``rfft2`` of samples; ``weights`` broadcasts onto
        the rfft layout.
        """
        a = np.abs(uhat_r) ** 2
        if weights is not None:
            a = a * weights
        return float(np.sum(a * self.rweights)) * self.dx**2 / self.n**2

    def to_json(self) -> dict:
        return {"n": self.n, "box": self.L}


def rfft(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a)


def irfft(a: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfft2(a, s=(n, n))


def ipow(a: np.ndarray, p: int) -> np.ndarray:
    """``a**p`` for a positive integer ``p`` by repeated squaring.

    numpy's float power goes through libm ``pow``, which is an order of
    magnitude slower on negative bases; this is the hot loop of the solver.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"exponent must be a positive integer, got {p}")
    p = int(p)
    out = None
    base = a
    while True:
        if p & 1:
            out = base if out is None else out * base
        p >>= 1
        if not p:
            return out
        base = base * base


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of ``u`` on a grid at one instant."""

    spec: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.samples, dtype=np.float64, copy=True)
        n = self.spec.n
        if a.shape != (n, n):
            raise ValueError(f"samples must have shape {(n, n)}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("field samples must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "Field":
        X, Y = spec.mesh
        return cls(spec, func(X, Y))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Field":
        return cls(spec, np.zeros((spec.n, spec.n)))

    def __mul__(self, c: float) -> "Field":
        return Field(self.spec, self.samples * float(c))

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _check_same(self.spec, other.spec)
        return Field(self.spec, self.samples + other.samples)

    def __sub__(self, other: "Field") -> "Field":
        _check_same(self.spec, other.spec)
        return Field(self.spec, self.samples - other.samples)

    def shifted(self, x0: float, y0: float) -> "Field":
        """Spectral translation ``u(x - x0, y - y0)``.

        Nyquist modes are dropped: a sub-grid shift of them is not real.
        """
        s = self.spec
        uh = rfft(self.samples) * np.exp(-1j * (s.kx * x0 + s.ky * y0))
        return Field(s, irfft(uh * s.nyquist_free, s.n))


def _check_same(a: GridSpec, b: GridSpec):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Unitary Fourier coefficients of a field, full ``n x n`` FFT layout."""

    spec: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        n = self.spec.n
        if c.shape != (n, n):
            raise ValueError(f"coeffs must have shape {(n, n)}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_series(cls, spec: GridSpec, amplitudes: np.ndarray) -> "Spectrum":
        """Build from Fourier-series amplitudes ``u = sum c exp(i(x xi + y eta))``."""
        return cls(spec, np.asarray(amplitudes) * spec.area / (2.0 * math.pi))

    def coeff(self, j: int, m: int) -> complex:
        """Coefficient at frequency pair ``(xi_j, eta_m)``."""
        n = self.spec.n
        return complex(self.coeffs[m % n, j % n])

    def mirrored(self) -> np.ndarray:
        """``conj(coeffs(-j, -m))`` on the same layout."""
        c = self.coeffs
        return np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))

    def symmetry_defect(self) -> float:
        """Max deviation from conjugate symmetry, relative to max |coeff|."""
        scale = float(np.max(np.abs(self.coeffs)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.coeffs - self.mirrored()))) / scale

    def parseval(self) -> float:
        """``sum |u_hat|^2 (pi/L)^2``."""
        return float(np.sum(np.abs(self.coeffs) ** 2)) * self.spec.dk**2


def forward_transform(f: Field) -> Spectrum:
    s = f.spec
    raw = sfft.fft2(f.samples) * s.sign * (s.dx**2 / (2.0 * math.pi))
    # symmetrise so the stored spectrum is conjugate-symmetric bit for bit
    mirror = np.conj(np.roll(raw[::-1, ::-1], 1, axis=(0, 1)))
    return Spectrum(s, 0.5 * (raw + mirror))


def inverse_transform(s: Spectrum, tol: float = 1e-12) -> Field:
    defect = s.symmetry_defect()
    if defect > tol:
        raise ValueError(
            f"spectrum is not conjugate-symmetric (defect {defect:.3e}); "
            "it does not represent a real field"
        )
    g = s.spec
    raw = s.coeffs * g.sign / (g.dx**2 / (2.0 * math.pi))
    return Field(g, sfft.ifft2(raw).real)


def dealias_mask(spec: GridSpec, pad_ratio) -> np.ndarray:
    """Boolean full-layout mask of modes with ``max(|j|,|m|) <= n/(2 pad)``."""
    pad_ratio = Fraction(pad_ratio)
    if pad_ratio < 1:
        raise ValueError(f"pad_ratio must be >= 1, got {pad_ratio}")
    cut = Fraction(spec.n, 2) / pad_ratio
    a = np.abs(spec.index)
    keep = a <= cut
    return keep[:, None] & keep[None, :]


def dealias(s: Spectrum, pad_ratio) -> Spectrum:
    """Zero all modes with ``max(|j|, |m|) > n / (2 pad_ratio)``."""
    return Spectrum(s.spec, np.where(dealias_mask(s.spec, pad_ratio), s.coeffs, 0.0))


def pad_size(n: int, pad_ratio) -> int:
    """Even padded grid size ``>= pad_ratio * n``."""
    m = math.ceil(Fraction(pad_ratio) * n)
    return m + (m % 2)


def padded_power(uhat_r: np.ndarray, n: int, power: int, pad_ratio) -> np.ndarray:
    """Half spectrum of ``u**power`` projected onto the ``n``-grid modes.

    ``uhat_r`` is a raw ``rfft2`` of the n-grid samples with zero Nyquist
    row and column.  The power is taken on a zero-padded grid of size
    ``pad_size(n, pad_ratio)``; it is alias-free whenever that size exceeds
    ``(power + 1) * (n/2 - 1)``.
    """
    M = pad_size(n, pad_ratio)
    if M == n:
        u = irfft(uhat_r, n)
        return rfft(ipow(u, power))
    h = n // 2
    big = np.zeros((M, M // 2 + 1), dtype=np.complex128)
    big[:h, :h] = uhat_r[:h, :h]
    big[M - h + 1 :, :h] = uhat_r[h + 1 :, :h]
    scale = (M / n) ** 2
    u = irfft(big * scale, M)
    w = rfft(ipow(u, power))
    out = np.zeros_like(uhat_r)
    out[:h, :h] = w[:h, :h]
    out[h + 1 :, :h] = w[M - h + 1 :, :h]
    return out / scale
