"""Choy-Haldane building blocks: scattering factors, component matrices, quasi-momenta."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularDenominator(ZeroDivisionError):
    pass


class RootCountMismatch(RuntimeError):
    pass


class NoNontrivialSolution(ValueError):
    pass


class InconsistentWeights(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    pass


def scattering_factor(k, q, u_tilde, j: float = 1.0) -> complex:
    """``s = [2J(sin k - sin q) - iU] / [2J(sin k - sin q) + iU]``; ``u_tilde=inf`` gives -1."""
    if u_tilde is None or (isinstance(u_tilde, float) and math.isinf(u_tilde)):
        return -1.0 + 0j
    d = 2.0 * j * (np.sin(k) - np.sin(q))
    den = d + 1j * u_tilde
    if abs(den) < 1e-14:
        raise SingularDenominator(f"scattering factor denominator {abs(den):.2e}")
    return complex((d - 1j * u_tilde) / den)


def bethe_u_tilde(k, q, n: int, j: float = 1.0) -> complex:
    """Fictitious interaction (energy units) for which ``e^{-ikN} = s_{k,q}``.

    Returns ``inf`` when ``e^{-ikN} = -1`` (hard-core-like component).
    """
    c = np.cos(k * n / 2)
    if abs(c) < 1e-300:
        return complex(math.inf)
    return complex(2.0 * j * (np.sin(k) - np.sin(q)) * np.tan(k * n / 2))


def theta_from_x(x: float) -> complex:
    """Relative quasi-momentum with ``cos(theta) = x``.

    Complex branches are chosen so that ``k = P/2 + theta`` has ``Im k <= 0``
    (the bound-state convention ``k = P/2 - iK`` and ``P/2 + pi - iK``).
    """
    if x > 1.0:
        return complex(0.0, -math.acosh(x))
    if x < -1.0:
        return complex(math.pi, -math.acosh(-x))
    return complex(math.acos(x), 0.0)


@dataclass
class ChoyHaldaneComponent:
    """One Choy-Haldane term with quasi-momenta ``k + q = P``.

    ``bethe=True`` means ``s = e^{-ikN}`` exactly (a finite-N solution), which
    lets the matrix be evaluated without overflow for complex ``k``.
    """

    k: complex
    q: complex
    s: complex
    u_tilde: complex
    symmetric: bool = True
    bethe: bool = True

    @property
    def P(self) -> float:
        return float((self.k + self.q).real)

    @property
    def K(self) -> float:
        """Decay constant of the relative wavefunction (0 for scattering states)."""
        return float(abs(self.k.imag))

    @classmethod
    def from_k(cls, k: complex, P: float, n: int, j: float = 1.0, symmetric: bool = True):
        """Finite-N component obeying the Bethe equation ``e^{-ikN} = s``."""
        k = complex(k)
        q = complex(P) - k
        s = np.exp(-1j * k * n)
        return cls(k, q, complex(s), bethe_u_tilde(k, q, n, j), symmetric, True)

    def bethe_residual(self, n: int) -> float:
        return float(abs(np.exp(-1j * self.k * n) - self.s))


def choy_haldane_matrix(n: int, comp: ChoyHaldaneComponent) -> np.ndarray:
    """``N x N`` matrix of a Choy-Haldane component.

    Symmetric form: ``e^{ikn+iqm} + s e^{iqn+ikm}`` for ``n <= m``, mirrored.
    Antisymmetric form: ``e^{ikn+iqm} - s e^{iqn+ikm}`` for ``n < m``, zero
    diagonal, anti-mirrored.
    """
    k, q = comp.k, comp.q
    P = k + q
    idx = np.arange(n)
    nn, mm = np.meshgrid(idx, idx, indexing="ij")
    delta = mm - nn
    upper = delta >= 0
    dd = np.where(upper, delta, 0)
    centre = np.exp(1j * P * nn)
    first = np.exp(1j * q * dd)
    if comp.bethe:
        # s e^{ik delta} = e^{ik(delta - N)}: stays bounded for Im k < 0
        second = np.exp(1j * k * (dd - n))
    else:
        second = comp.s * np.exp(1j * k * dd)
    sign = 1.0 if comp.symmetric else -1.0
    vals = centre * (first + sign * second)
    out = np.where(upper, vals, 0)
    if comp.symmetric:
        out = out + np.triu(out, 1).T
    else:
        np.fill_diagonal(out, 0)
        out = out - out.T
    return out


def antisymmetric_plane_wave(n: int, k: float, q: float) -> np.ndarray:
    """``e^{ikn+iqm} - e^{iqn+ikm}`` over all ``n, m``."""
    idx = np.arange(n)
    nn, mm = np.meshgrid(idx, idx, indexing="ij")
    return np.exp(1j * (k * nn + q * mm)) - np.exp(1j * (q * nn + k * mm))
