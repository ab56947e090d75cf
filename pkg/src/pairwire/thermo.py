"""Grand-canonical statistics of an ideal gas of pairs in the wire.

All densities are per unit length of the wire. The box ``[0, L]`` for each
electron turns into a strip whose axis (the diagonal) has length
``sqrt(2) L``, so each transverse channel ``eps_n`` carries
``sqrt(2)/pi`` longitudinal states per unit wire length and unit wavenumber.
The thermodynamic-limit density of states above the essential threshold is
therefore::

    rho_exc(mu) = (sqrt 2 / pi) sum_n int_0^inf dx / (exp(beta eps_n) exp(beta (x^2 - mu)) - 1)
                = (2 pi beta)^(-1/2) sum_n Li_{1/2}(exp(-beta (eps_n - mu)))
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfcx

from .eigensolver import SpectrumSample
from .onedim import essential_spectrum_bottom, epsilon_dirichlet
from .polylog import li_half_exp

#: Longitudinal states per unit wire length per unit wavenumber, per channel.
CHANNEL_DOS = math.sqrt(2.0) / math.pi
#: Allowed truncation of the finite-L level sum, relative to rho.
TAIL_RTOL = 1e-8
DENSITY_RTOL = 1e-10


@dataclass
class ThermoState:
    beta: float
    rho: float
    L: float
    mu: float
    occupations: np.ndarray
    tail_density: float
    threshold: float
    below_density: float  # levels strictly below threshold
    above_density: float  # levels at or above threshold, tail included
    condensate_fraction: float

    @property
    def total_density(self) -> float:
        return self.below_density + self.above_density


def bose_occupation(E, mu, beta):
    """Bose-Einstein occupation ``1 / (exp(beta (E - mu)) - 1)``.

    Written as ``exp(-x) / (1 - exp(-x))`` which is accurate both for
    ``x << 1`` and deep in the Boltzmann tail. Accepts arrays for ``E``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    x = beta * (np.asarray(E, dtype=float) - mu)
    if np.any(x <= 0):
        raise ValueError(f"need mu < E for every level (mu={mu!r}, min E={np.min(E)!r})")
    out = np.exp(-x) / -np.expm1(-x)
    return float(out) if out.ndim == 0 else out


def _channels(alpha: float, d: float, mu: float, beta: float, cutoff: float = 40.0) -> np.ndarray:
    """Transverse thresholds eps_n with beta (eps_n - mu) up to ``cutoff`` (at least one)."""
    n = 1
    while True:
        eps = epsilon_dirichlet(alpha, d, n_max=n - 1)
        if beta * (eps[-1] - mu) > cutoff:
            return eps
        n *= 2


def excited_density(alpha: float, d: float, mu: float, beta: float, n_levels: int | None = None) -> float:
    """Thermodynamic-limit density of pairs above the essential threshold.

    Channels are summed until ``beta (eps_n - mu) > 40``; each dropped channel
    contributes less than ``exp(-40)/sqrt(2 pi beta)`` and the thresholds grow
    quadratically in ``n``, so the dropped tail is far below 1e-12 relative.
    """
    eps0 = essential_spectrum_bottom(alpha, d)
    if not mu < eps0:
        raise ValueError(f"mu={mu!r} must lie below the essential threshold {eps0!r}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    eps = epsilon_dirichlet(alpha, d, n_levels - 1) if n_levels else _channels(alpha, d, mu, beta)
    total = sum(li_half_exp(beta * (e - mu)) for e in eps[::-1])
    return total / math.sqrt(2.0 * math.pi * beta)


def critical_density(alpha: float, d: float, beta: float, E0_limit: float) -> float:
    """Excited density with the chemical potential pinned at the ground-state energy."""
    eps0 = essential_spectrum_bottom(alpha, d)
    if not E0_limit < eps0:
        raise ValueError(
            f"no discrete spectrum detected (E0={E0_limit!r} >= threshold {eps0!r}); "
            "condensation criterion inapplicable"
        )
    return excited_density(alpha, d, E0_limit, beta)


def tail_density(spectrum: SpectrumSample, mu: float, beta: float) -> float:
    """Density carried by levels above the largest computed eigenvalue.

    Estimated from the half-infinite strip: channel ``n`` contributes its
    longitudinal states with ``eps_n + k^2`` above the cutoff.
    """
    E_cut = float(spectrum.eigenvalues[-1])
    if beta * (E_cut - mu) > 745:
        return 0.0
    total = 0.0
    for eps in _channels(spectrum.alpha, spectrum.d, mu, beta, cutoff=max(40.0, beta * (E_cut - mu) + 40)):
        kmin = math.sqrt(max(E_cut - eps, 0.0))
        x = beta * (max(eps, E_cut) - mu)  # smallest exponent in this channel's tail
        jmax = max(1, min(100_000, int(math.ceil(42.0 / x))))
        j = np.arange(1, jmax + 1, dtype=float)
        # int_kmin^inf exp(-j beta (eps + k^2 - mu)) dk, via erfcx for stability
        terms = 0.5 * np.sqrt(math.pi / (j * beta)) * np.exp(-j * beta * (eps + kmin**2 - mu)) * erfcx(
            kmin * np.sqrt(j * beta)
        )
        total += float(np.sum(terms[::-1]))
    return CHANNEL_DOS * total


def level_density(spectrum: SpectrumSample, mu: float, beta: float, tail: bool = True) -> float:
    """``(1/L) sum_n n(E_n)`` over computed levels, plus the tail estimate."""
    occ = bose_occupation(spectrum.eigenvalues, mu, beta)
    rho = float(np.sum(np.atleast_1d(occ)[::-1])) / spectrum.L
    return rho + (tail_density(spectrum, mu, beta) if tail else 0.0)


def solve_chemical_potential(spectrum: SpectrumSample, rho: float, beta: float, tail: bool = True) -> float:
    """Chemical potential ``mu_L < E_0`` at which the level density equals ``rho``.

    Solved for ``log(E_0 - mu)``. The single-level solution
    ``E_0 - ln(1 + 1/(rho L)) / beta`` bounds the root from above because
    every further level only adds density.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    if len(spectrum.eigenvalues) == 0:
        raise ValueError("empty spectrum")
    E0 = float(spectrum.eigenvalues[0])
    L = spectrum.L

    def excess(u: float) -> float:
        return level_density(spectrum, E0 - math.exp(u), beta, tail) / rho - 1.0

    u_hi = math.log(math.log1p(1.0 / (rho * L)) / beta)
    f_hi = excess(u_hi)
    if f_hi <= 0.0:
        return E0 - math.exp(u_hi)
    u_lo = u_hi
    while excess(u_lo) > 0.0:
        u_lo += 1.0
        if u_lo > u_hi + 60:
            raise ArithmeticError("could not bracket the chemical potential")
    u = brentq(excess, u_hi, u_lo, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return E0 - math.exp(u)


def thermo_state(spectrum: SpectrumSample, rho: float, beta: float, threshold: float, tail: bool = True) -> ThermoState:
    mu = solve_chemical_potential(spectrum, rho, beta, tail)
    occ = np.atleast_1d(bose_occupation(spectrum.eigenvalues, mu, beta))
    L = spectrum.L
    below = spectrum.eigenvalues < threshold
    t = tail_density(spectrum, mu, beta) if tail else 0.0
    return ThermoState(
        beta=beta,
        rho=rho,
        L=L,
        mu=mu,
        occupations=occ,
        tail_density=t,
        threshold=threshold,
        below_density=float(np.sum(occ[below])) / L,
        above_density=float(np.sum(occ[~below][::-1])) / L + t,
        condensate_fraction=float(occ[0]) / (rho * L),
    )


def condensate_fraction(spectrum: SpectrumSample, rho: float, beta: float, threshold: float, tail: bool = True) -> ThermoState:
    """Ground-level share ``n_0 / (rho L)`` at the solved chemical potential.

    Returns the full :class:`ThermoState`, which also splits the density at
    ``threshold`` into the below- and above-threshold groups.
    """
    return thermo_state(spectrum, rho, beta, threshold, tail)


def above_threshold_density(spectrum: SpectrumSample, mu: float, beta: float, threshold: float, tail: bool = True) -> float:
    """``(1/L) sum_{E_n >= threshold} n(E_n)`` at a fixed chemical potential."""
    E = spectrum.eigenvalues[spectrum.eigenvalues >= threshold]
    occ = np.atleast_1d(bose_occupation(E, mu, beta)) if len(E) else np.zeros(0)
    return float(np.sum(occ[::-1])) / spectrum.L + (tail_density(spectrum, mu, beta) if tail else 0.0)
