"""Eigenvalues of the transverse Robin-interval Laplacian.

The cross-section of the pair strip perpendicular to the diagonal is the
interval ``[0, d/sqrt(2)]``. The contact interaction becomes the Robin
condition ``u'(0) = c u(0)`` with ``c = alpha / (2 sqrt 2)``; the far end is
either Dirichlet or Neumann. Units are hbar = 2m = 1, so an eigenvalue is
``k**2`` for the root ``k`` of the secular equation.

With ``theta = k * d / sqrt(2)`` and ``gamma = c * d / sqrt(2)`` the secular
functions are::

    Dirichlet:  theta cos(theta) + gamma sin(theta) = 0,  theta_n in [(n+1/2)pi, (n+1)pi)
    Neumann:    theta sin(theta) - gamma cos(theta) = 0,  theta_n in [n pi, (n+1/2)pi)

Each bracket holds exactly one root for every ``gamma >= 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

SQRT2 = math.sqrt(2.0)


class FarEnd(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class BracketError(RuntimeError):
    """A bracket failed to enclose a sign change (internal failure)."""


@dataclass(frozen=True)
class RobinIntervalProblem:
    """Robin condition of strength ``alpha/(2 sqrt 2)`` at 0, ``far_end`` at ``d/sqrt 2``.

    ``alpha = math.inf`` selects the exact Dirichlet condition at 0.
    """

    alpha: float
    d: float
    far_end: FarEnd = FarEnd.DIRICHLET

    def __post_init__(self) -> None:
        if not (self.alpha >= 0.0):  # also rejects nan
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise ValueError(f"d must be positive and finite, got {self.d!r}")
        object.__setattr__(self, "far_end", FarEnd(self.far_end))

    @property
    def length(self) -> float:
        return self.d / SQRT2

    @property
    def robin(self) -> float:
        """Robin coefficient ``c`` in ``u'(0) = c u(0)``."""
        return self.alpha / (2.0 * SQRT2)

    @property
    def gamma(self) -> float:
        """Dimensionless Robin parameter ``c * length``."""
        return self.robin * self.length

    def secular(self, theta: float) -> float:
        g = self.gamma
        if self.far_end is FarEnd.DIRICHLET:
            return theta * math.cos(theta) + g * math.sin(theta)
        return theta * math.sin(theta) - g * math.cos(theta)

    def bracket(self, n: int) -> tuple[float, float]:
        """Interval in ``theta`` holding the ``n``-th root."""
        if self.far_end is FarEnd.DIRICHLET:
            return (n + 0.5) * math.pi, (n + 1.0) * math.pi
        return n * math.pi, (n + 0.5) * math.pi


@dataclass(frozen=True)
class ReducedSpectrum:
    problem: RobinIntervalProblem
    eigenvalues: np.ndarray
    wavenumbers: np.ndarray

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __getitem__(self, n: int) -> float:
        return float(self.eigenvalues[n])


def bracketed_root(
    f: Callable[[float], float],
    a: float,
    b: float,
    xtol: float,
    maxiter: int = 200,
) -> float:
    """Root of ``f`` in ``[a, b]`` by bisection with safeguarded secant steps.

    A secant step is taken only if it lands strictly inside the bracket and
    the previous step at least halved the bracket; otherwise the midpoint is
    used, so the width halves at least every second iteration.
    Requires ``f(a) * f(b) <= 0``.
    """
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise BracketError(f"no sign change on [{a!r}, {b!r}]: f={fa!r}, {fb!r}")
    last_width = math.inf
    for _ in range(maxiter):
        x = b - fb * (b - a) / (fb - fa)
        if not (a < x < b) or (b - a) > 0.5 * last_width:
            x = 0.5 * (a + b)
        last_width = b - a
        fx = f(x)
        if fx == 0.0:
            return x
        if math.copysign(1.0, fx) == math.copysign(1.0, fa):
            a, fa = x, fx
        else:
            b, fb = x, fx
        if b - a <= xtol:
            break
    else:
        raise BracketError(f"bisection did not converge on [{a!r}, {b!r}]")
    return a if abs(fa) <= abs(fb) else b


def reduced_eigenvalues(problem: RobinIntervalProblem, n_max: int) -> ReducedSpectrum:
    """Eigenvalues ``eps_0 < ... < eps_{n_max}`` of the Robin-interval Laplacian.

    Roots are located to an absolute tolerance ``1e-12 * (1 + k)`` in ``k``.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    ell = problem.length
    thetas = np.empty(n_max + 1)
    for n in range(n_max + 1):
        lo, hi = problem.bracket(n)
        if math.isinf(problem.alpha):
            # Dirichlet at 0: theta = (n+1) pi, or (n+1/2) pi with a Neumann far end.
            thetas[n] = hi
        elif problem.gamma == 0.0:
            thetas[n] = lo
        else:
            xtol = 1e-12 * (1.0 + hi / ell) * ell
            thetas[n] = bracketed_root(problem.secular, lo, hi, xtol)
    ks = thetas / ell
    return ReducedSpectrum(problem=problem, eigenvalues=ks * ks, wavenumbers=ks)


def epsilon_dirichlet(alpha: float, d: float, n_max: int = 0) -> np.ndarray:
    return reduced_eigenvalues(RobinIntervalProblem(alpha, d, FarEnd.DIRICHLET), n_max).eigenvalues


def epsilon_neumann(alpha: float, d: float, n_max: int = 0) -> np.ndarray:
    return reduced_eigenvalues(RobinIntervalProblem(alpha, d, FarEnd.NEUMANN), n_max).eigenvalues


def essential_spectrum_bottom(alpha: float, d: float) -> float:
    """Bottom of the essential spectrum of the half-line pair Hamiltonian."""
    return float(epsilon_dirichlet(alpha, d)[0])
