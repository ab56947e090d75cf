"""Parameter sweeps behind the command-line subcommands.

Every command takes a :class:`RunConfig` and returns a :class:`Table` whose
rows carry the full parameter tuple. ``failures`` lists violated checks for
the verification commands (``bounds``, ``count-vs-L``, ``trace-probe``).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .config import RunConfig
from .eigensolver import SpectrumSample, count_below, smallest_eigenpairs, spectrum_below
from .extrapolate import GroundStateEstimate, ground_state_limit
from .onedim import epsilon_dirichlet, epsilon_neumann, essential_spectrum_bottom
from .strip import StripGeometry, assemble, build_mesh, trace_ratio
from .thermo import (
    condensate_fraction,
    critical_density,
    solve_chemical_potential,
    tail_density,
)


@dataclass
class Table:
    name: str
    rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


def _parallel(cfg: RunConfig, fn: Callable, items: Iterable) -> list:
    items = list(items)
    if cfg.threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, items))


def _solver(cfg: RunConfig) -> dict:
    return {"seed": cfg.seed, "preconditioner": cfg.preconditioner}


def refinement_levels(m: int) -> int:
    """Nested meshes available below ``m`` (at most 3, coarsest with m >= 2)."""
    levels = 1
    while levels < 3 and m % 2 ** levels == 0 and m // 2 ** levels >= 2:
        levels += 1
    if levels < 2:
        raise ValueError(f"m={m} must be even to allow one refinement step")
    return levels


def estimate_ground_state(cfg: RunConfig, alpha: float, L: float) -> GroundStateEstimate:
    return ground_state_limit(
        alpha, cfg.d, L, cfg.m, levels=refinement_levels(cfg.m), tol=cfg.tol, **_solver(cfg)
    )


def spectrum1d(cfg: RunConfig) -> Table:
    table = Table("spectrum1d")
    for alpha in cfg.alpha:
        eD = epsilon_dirichlet(alpha, cfg.d, cfg.n_max)
        eN = epsilon_neumann(alpha, cfg.d, cfg.n_max)
        for n in range(cfg.n_max + 1):
            table.rows.append({"alpha": alpha, "d": cfg.d, "n": n, "eps_D": eD[n], "eps_N": eN[n]})
    return table


def bounds(cfg: RunConfig) -> Table:
    """Sandwich ``2 eps^N_0 <= E_0 <= eps^D_0`` at the largest configured box."""
    table = Table("bounds")
    L = max(cfg.L)

    def point(alpha: float) -> dict:
        est = estimate_ground_state(cfg, alpha, L)
        lower = 2.0 * float(epsilon_neumann(alpha, cfg.d)[0])
        upper = essential_spectrum_bottom(alpha, cfg.d)
        E_Lh = est.mesh_values[cfg.m]
        return {
            "alpha": alpha, "d": cfg.d, "L": L, "m": cfg.m,
            "lower_2epsN0": lower, "E_Lh": E_Lh, "E0_extrapolated": est.value,
            "margin": est.margin, "h_order": est.h_order, "upper_epsD0": upper,
            "lower_ok": bool(lower <= E_Lh + cfg.tol * (1 + abs(E_Lh))),
            "upper_ok": bool(est.value <= upper + est.margin),
        }

    table.rows = _parallel(cfg, point, cfg.alpha)
    for r in table.rows:
        if not (r["lower_ok"] and r["upper_ok"]):
            table.failures.append(f"sandwich bound violated at alpha={r['alpha']}")
    return table


def alpha_sweep(cfg: RunConfig) -> Table:
    """Spectral gap below the essential threshold and bound-state count per alpha."""
    table = Table("alpha-sweep")
    L = max(cfg.L)

    def point(alpha: float) -> dict:
        est = estimate_ground_state(cfg, alpha, L)
        eD = essential_spectrum_bottom(alpha, cfg.d)
        forms = assemble(build_mesh(StripGeometry(cfg.d, L), cfg.m), alpha)
        count = count_below(forms, eD, cfg.tol, margin=est.margin, **_solver(cfg))
        gap = eD - est.value
        return {
            "alpha": alpha, "d": cfg.d, "L": L, "m": cfg.m, "epsD0": eD,
            "E0_extrapolated": est.value, "gap": gap, "margin": est.margin,
            "gap_resolved": bool(gap > est.margin), "bound_states": count,
        }

    table.rows = _parallel(cfg, point, cfg.alpha)
    return table


def count_vs_L(cfg: RunConfig) -> Table:
    """Eigenvalue counts below ``eps^D_0`` and in the window above it, per box size."""
    table = Table("count-vs-L")

    def point(args: tuple[float, float]) -> dict:
        alpha, L = args
        eD = essential_spectrum_bottom(alpha, cfg.d)
        forms = assemble(build_mesh(StripGeometry(cfg.d, L), cfg.m), alpha)
        s = spectrum_below(forms, eD + cfg.window, cfg.tol, **_solver(cfg))
        E = s.eigenvalues
        cut = eD - cfg.tol * (1 + eD)
        return {
            "alpha": alpha, "d": cfg.d, "L": forms.mesh.L, "m": cfg.m, "epsD0": eD,
            "window": cfg.window, "count_below": int(np.count_nonzero(E < cut)),
            "count_window": int(np.count_nonzero((E >= eD) & (E <= eD + cfg.window))),
            "E0_Lh": float(E[0]),
        }

    table.rows = _parallel(cfg, point, [(a, L) for a in cfg.alpha for L in sorted(cfg.L)])
    for alpha in cfg.alpha:
        counts = {r["count_below"] for r in table.rows if r["alpha"] == alpha}
        if len(counts) > 1:
            table.failures.append(f"count below threshold varies with L at alpha={alpha}: {sorted(counts)}")
    return table


def thermal_spectrum(
    cfg: RunConfig, alpha: float, L: float, rhos: list[float], beta: float, m: int | None = None
) -> SpectrumSample:
    """Enough low-lying levels that the estimated tail stays below ``tail_rtol * rho``."""
    eD = essential_spectrum_bottom(alpha, cfg.d)
    forms = assemble(build_mesh(StripGeometry(cfg.d, L), m or cfg.m), alpha)
    cut = eD + 10.0 / beta
    while True:
        s = spectrum_below(forms, cut, cfg.tol, **_solver(cfg))
        worst = 0.0
        for rho in rhos:
            mu = solve_chemical_potential(s, rho, beta)
            worst = max(worst, tail_density(s, mu, beta) / rho)
        if worst <= cfg.tail_rtol:
            return s
        cut = float(s.eigenvalues[-1]) + 5.0 / beta


def condensate(cfg: RunConfig) -> Table:
    """Chemical potential and ground-level fraction over (alpha, rho, L)."""
    table = Table("condensate")
    for alpha in cfg.alpha:
        eD = essential_spectrum_bottom(alpha, cfg.d)
        est = estimate_ground_state(cfg, alpha, min(cfg.L))
        try:
            rho_c = critical_density(alpha, cfg.d, cfg.beta, est.value)
        except ValueError as err:
            table.failures.append(f"alpha={alpha}: {err}")
            continue
        rhos = [r * rho_c if cfg.rho_units == "critical" else r for r in cfg.rho]

        def point(L: float, alpha=alpha, rhos=rhos, rho_c=rho_c, eD=eD, est=est) -> list[dict]:
            s = thermal_spectrum(cfg, alpha, L, rhos, cfg.beta)
            rows = []
            for rho in rhos:
                st = condensate_fraction(s, rho, cfg.beta, eD)
                rows.append({
                    "alpha": alpha, "d": cfg.d, "L": s.L, "m": cfg.m, "beta": cfg.beta,
                    "rho": rho, "rho_over_rho_c": rho / rho_c, "rho_c": rho_c,
                    "E0_extrapolated": est.value, "E0_Lh": s.ground, "mu_L": st.mu,
                    "n0": float(st.occupations[0]), "condensate_fraction": st.condensate_fraction,
                    "below_density": st.below_density, "above_density": st.above_density,
                    "tail_density": st.tail_density, "threshold": eD, "levels": len(s),
                })
            return rows

        for rows in _parallel(cfg, point, sorted(cfg.L)):
            table.rows.extend(rows)
    table.rows.sort(key=lambda r: (r["alpha"], r["rho"], r["L"]))
    return table


def trace_probe(cfg: RunConfig) -> Table:
    """Largest diagonal-trace ratio over the first ``k`` eigenvectors, at ``m`` and ``2m``."""
    table = Table("trace-probe")

    def point(args: tuple[float, float, int]) -> dict:
        alpha, L, m = args
        forms = assemble(build_mesh(StripGeometry(cfg.d, L), m), alpha)
        s = smallest_eigenpairs(forms, cfg.k, cfg.tol, **_solver(cfg))
        ratios = [trace_ratio(forms, s.vectors[:, j]) for j in range(cfg.k)]
        j = int(np.argmax(ratios))
        return {
            "alpha": alpha, "d": cfg.d, "L": forms.mesh.L, "m": m, "k": cfg.k,
            "sup_ratio": ratios[j], "argmax": j, "E_argmax": float(s.eigenvalues[j]),
        }

    pts = [(a, L, mm) for a in cfg.alpha for L in sorted(cfg.L) for mm in (cfg.m, 2 * cfg.m)]
    table.rows = _parallel(cfg, point, pts)
    for a in cfg.alpha:
        for L in sorted(cfg.L):
            pair = [r["sup_ratio"] for r in table.rows if r["alpha"] == a and math.isclose(r["L"], L, rel_tol=1e-9)]
            if len(pair) == 2 and abs(pair[1] - pair[0]) > 0.1 * abs(pair[0]):
                table.failures.append(f"trace ratio not stable under refinement at alpha={a}, L={L}: {pair}")
    return table


COMMANDS: dict[str, Callable[[RunConfig], Table]] = {
    "spectrum1d": spectrum1d,
    "bounds": bounds,
    "alpha-sweep": alpha_sweep,
    "count-vs-L": count_vs_L,
    "condensate": condensate,
    "trace-probe": trace_probe,
}
