"""Truncated 2x2 matrix Laurent loops in the spectral parameter lambda.

A :class:`MatrixLoop` stores coefficients for exponents ``-N..N`` in an array
of shape ``(..., 2N+1, 2, 2)`` (index ``k + N`` holds the coefficient of
``lambda**k``).  Leading batch dimensions are allowed so that a whole grid of
frames can be pushed through the same numpy kernels at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MatrixLoop",
    "LoopClass",
    "TruncationMismatch",
    "ParityMismatch",
    "Singular",
    "DEFAULT_N",
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "roots_of_unity",
]

DEFAULT_N = 16

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


class TruncationMismatch(ValueError):
    pass


class ParityMismatch(ValueError):
    pass


class Singular(ArithmeticError):
    """Sampled values of a loop are (numerically) not invertible."""


class LoopClass(enum.Enum):
    MINUS_STAR = "MinusStar"
    PLUS = "Plus"
    UNITARY = "Unitary"
    GENERAL = "General"


def roots_of_unity(count: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(count) / count)


def _twist_mask(N: int) -> np.ndarray:
    """Boolean mask (2N+1, 2, 2) of entries allowed by the twisting condition."""
    k = np.arange(-N, N + 1)
    even = (k % 2 == 0)[:, None, None]
    diag = np.eye(2, dtype=bool)[None]
    return np.where(even, diag, ~diag)


@dataclass(frozen=True, eq=False)
class MatrixLoop:
    coeffs: np.ndarray
    twisted: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim < 3 or c.shape[-2:] != (2, 2) or c.shape[-3] % 2 != 1:
            raise ValueError(f"bad coefficient shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction ------------------------------------------------------
    @classmethod
    def zeros(cls, N: int = DEFAULT_N, batch: tuple = (), twisted: bool = True) -> "MatrixLoop":
        return cls(np.zeros(batch + (2 * N + 1, 2, 2), complex), twisted)

    @classmethod
    def identity(cls, N: int = DEFAULT_N, batch: tuple = ()) -> "MatrixLoop":
        c = np.zeros(batch + (2 * N + 1, 2, 2), complex)
        c[..., N, :, :] = np.eye(2)
        return cls(c, True)

    @classmethod
    def constant(cls, m, N: int = DEFAULT_N, twisted: bool | None = None) -> "MatrixLoop":
        m = np.asarray(m, dtype=complex)
        c = np.zeros(m.shape[:-2] + (2 * N + 1, 2, 2), complex)
        c[..., N, :, :] = m
        if twisted is None:
            twisted = bool(np.all(m[..., 0, 1] == 0) and np.all(m[..., 1, 0] == 0))
        return cls(c, twisted)

    @classmethod
    def from_terms(cls, terms: dict, N: int = DEFAULT_N, twisted: bool = True) -> "MatrixLoop":
        """Build from ``{exponent: 2x2 matrix}``."""
        c = np.zeros((2 * N + 1, 2, 2), complex)
        for k, m in terms.items():
            if abs(k) > N:
                raise TruncationMismatch(f"exponent {k} outside [-{N}, {N}]")
            c[k + N] += np.asarray(m, dtype=complex)
        return cls(c, twisted)

    @classmethod
    def from_samples(cls, values: np.ndarray, N: int, twisted: bool = True) -> "MatrixLoop":
        """Project values sampled at ``roots_of_unity(L)`` (axis -3) onto exponents ``-N..N``."""
        L = values.shape[-3]
        if L < 2 * N + 1:
            raise ValueError("too few samples for the requested truncation")
        spec = np.fft.fft(values, axis=-3) / L
        idx = np.arange(-N, N + 1) % L
        c = spec[..., idx, :, :]
        loop = cls(c, twisted)
        return loop.project_twisted() if twisted else loop

    # basic views -------------------------------------------------------
    @property
    def N(self) -> int:
        return (self.coeffs.shape[-3] - 1) // 2

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-3]

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.N:
            return np.zeros(self.batch_shape + (2, 2), complex)
        return self.coeffs[..., k + self.N, :, :]

    def __getitem__(self, idx) -> "MatrixLoop":
        """Index into the batch dimensions."""
        return MatrixLoop(self.coeffs[idx], self.twisted)

    def with_truncation(self, N: int) -> "MatrixLoop":
        """Drop (or zero-pad) exponents to the band ``-N..N``."""
        M = self.N
        c = np.zeros(self.batch_shape + (2 * N + 1, 2, 2), complex)
        lo = min(M, N)
        c[..., N - lo : N + lo + 1, :, :] = self.coeffs[..., M - lo : M + lo + 1, :, :]
        return MatrixLoop(c, self.twisted)

    def project_twisted(self) -> "MatrixLoop":
        return MatrixLoop(np.where(_twist_mask(self.N), self.coeffs, 0), True)

    # arithmetic --------------------------------------------------------
    def _check(self, other: "MatrixLoop"):
        if self.N != other.N:
            raise TruncationMismatch(f"truncations differ: {self.N} vs {other.N}")

    def multiply(self, other: "MatrixLoop") -> "MatrixLoop":
        """Cauchy product truncated to ``-N..N``."""
        self._check(other)
        N = self.N
        a, b = self.coeffs, other.coeffs
        full = np.zeros(np.broadcast_shapes(a.shape[:-3], b.shape[:-3]) + (4 * N + 1, 2, 2), complex)
        for i in range(2 * N + 1):
            ai = a[..., i : i + 1, :, :]
            if not np.any(ai):
                continue
            full[..., i : i + 2 * N + 1, :, :] += ai @ b
        return MatrixLoop(full[..., N : 3 * N + 1, :, :], self.twisted and other.twisted)

    __matmul__ = multiply

    def __add__(self, other: "MatrixLoop") -> "MatrixLoop":
        self._check(other)
        return MatrixLoop(self.coeffs + other.coeffs, self.twisted and other.twisted)

    def __sub__(self, other: "MatrixLoop") -> "MatrixLoop":
        self._check(other)
        return MatrixLoop(self.coeffs - other.coeffs, self.twisted and other.twisted)

    def scale(self, s) -> "MatrixLoop":
        return MatrixLoop(self.coeffs * np.asarray(s)[..., None, None, None], self.twisted)

    def right_constant(self, m) -> "MatrixLoop":
        """``self * m`` for a lambda-independent matrix ``m``."""
        return MatrixLoop(self.coeffs @ np.asarray(m, complex)[..., None, :, :], self.twisted)

    def inverse(self, oversample: int = 4, cond_bound: float = 1e12) -> "MatrixLoop":
        """Inverse via sampled adjugate and a discrete Fourier projection."""
        N = self.N
        L = 1 << int(np.ceil(np.log2(oversample * (2 * N + 1))))
        vals = self.sample(roots_of_unity(L))
        det = vals[..., 0, 0] * vals[..., 1, 1] - vals[..., 0, 1] * vals[..., 1, 0]
        norm2 = np.sum(np.abs(vals) ** 2, axis=(-2, -1))
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = norm2 / np.abs(det)
        if not np.all(np.isfinite(cond)) or np.max(cond) > cond_bound:
            raise Singular(f"loop values badly conditioned (estimate {np.max(cond):.3g})")
        adj = np.empty_like(vals)
        adj[..., 0, 0] = vals[..., 1, 1]
        adj[..., 1, 1] = vals[..., 0, 0]
        adj[..., 0, 1] = -vals[..., 0, 1]
        adj[..., 1, 0] = -vals[..., 1, 0]
        inv = adj / det[..., None, None]
        return MatrixLoop.from_samples(inv, N, self.twisted)

    def star(self) -> "MatrixLoop":
        """Pointwise conjugate transpose on the unit circle: ``sum c_k^H lambda^-k``."""
        c = np.conj(np.swapaxes(self.coeffs, -1, -2))[..., ::-1, :, :]
        return MatrixLoop(c, self.twisted)

    # evaluation --------------------------------------------------------
    def sample(self, lam) -> np.ndarray:
        """Values at ``lam`` (scalar or 1-d array); array axis goes before the 2x2 block."""
        lam = np.asarray(lam, dtype=complex)
        k = np.arange(-self.N, self.N + 1)
        powers = lam[..., None] ** k
        if lam.ndim == 0:
            return np.einsum("k,...kij->...ij", powers, self.coeffs)
        return np.einsum("lk,...kij->...lij", powers, self.coeffs)

    def theta_derivative(self) -> "MatrixLoop":
        """Coefficients of d/dtheta at lambda = exp(i theta)."""
        k = np.arange(-self.N, self.N + 1)
        return MatrixLoop(self.coeffs * (1j * k)[:, None, None], self.twisted)

    # norms and diagnostics ----------------------------------------------
    def sobolev_norm(self, s: float = 1.0) -> np.ndarray:
        if s <= 0.5:
            raise ValueError("Sobolev index must exceed 1/2")
        k = np.arange(-self.N, self.N + 1)
        w = (1.0 + k.astype(float) ** 2) ** s
        fro2 = np.sum(np.abs(self.coeffs) ** 2, axis=(-2, -1))
        return np.sqrt(np.sum(w * fro2, axis=-1))

    def tail_mass(self, bands: int = 2) -> np.ndarray:
        """Frobenius mass in the outermost ``bands`` exponents on each side, relative to the total."""
        fro2 = np.sum(np.abs(self.coeffs) ** 2, axis=(-2, -1))
        tail = fro2[..., :bands].sum(-1) + fro2[..., -bands:].sum(-1)
        total = fro2.sum(-1)
        return np.sqrt(tail / np.where(total > 0, total, 1.0))

    def parity_defect(self) -> float:
        off = np.where(_twist_mask(self.N), 0, self.coeffs)
        return float(np.max(np.abs(off), initial=0.0))

    def det_defect(self, count: int = 32) -> float:
        v = self.sample(roots_of_unity(count))
        det = v[..., 0, 0] * v[..., 1, 1] - v[..., 0, 1] * v[..., 1, 0]
        return float(np.max(np.abs(det - 1)))

    def unitarity_defect(self, count: int = 32) -> float:
        v = self.sample(roots_of_unity(count))
        prod = v @ np.conj(np.swapaxes(v, -1, -2))
        return float(np.max(np.abs(prod - np.eye(2))))

    def classify(self, tol: float = 1e-8) -> LoopClass:
        N = self.N
        c = np.abs(self.coeffs)
        scale = max(1.0, float(c.max(initial=0.0)))
        if c[..., N + 1 :, :, :].max(initial=0.0) <= tol * scale and np.max(
            np.abs(self.coeffs[..., N, :, :] - np.eye(2)), initial=0.0
        ) <= tol * scale:
            return LoopClass.MINUS_STAR
        if c[..., :N, :, :].max(initial=0.0) <= tol * scale:
            return LoopClass.PLUS
        if self.unitarity_defect() <= tol and self.det_defect() <= tol:
            return LoopClass.UNITARY
        return LoopClass.GENERAL

    def is_class(self, tag: LoopClass, tol: float = 1e-8) -> bool:
        N = self.N
        c = self.coeffs
        if tag is LoopClass.MINUS_STAR:
            return bool(
                np.max(np.abs(c[..., N + 1 :, :, :]), initial=0.0) <= tol
                and np.max(np.abs(c[..., N, :, :] - np.eye(2)), initial=0.0) <= tol
            )
        if tag is LoopClass.PLUS:
            return bool(np.max(np.abs(c[..., :N, :, :]), initial=0.0) <= tol)
        if tag is LoopClass.UNITARY:
            return self.unitarity_defect() <= tol and self.det_defect() <= tol
        return True

    def dump(self) -> str:
        """Debug text: one line per exponent, 8 floats (row-major re/im)."""
        if self.batch_shape:
            raise ValueError("dump expects a single loop")
        lines = []
        for i, k in enumerate(range(-self.N, self.N + 1)):
            m = self.coeffs[i].reshape(-1)
            vals = " ".join(f"{x:.17g}" for z in m for x in (z.real, z.imag))
            lines.append(f"{k} {vals}")
        return "\n".join(lines) + "\n"
