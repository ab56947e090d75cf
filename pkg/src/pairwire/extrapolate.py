"""Mesh and box-size extrapolation of finite-volume ground-state energies.

The 135 degree corner where the Neumann axis meets the pair-size Dirichlet
line limits P1 eigenvalue convergence to roughly ``h^(4/3)``, so the
Richardson step uses the order observed on three nested meshes rather than
assuming ``h^2``. Box truncation error decays exponentially in ``L`` for a
bound state and is removed by an Aitken fit over three equally spaced boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .eigensolver import DEFAULT_TOL, smallest_eigenpairs
from .strip import StripGeometry, assemble, build_mesh

#: Fallback convergence order when only two meshes are available.
CORNER_ORDER = 4.0 / 3.0


@dataclass
class Extrapolation:
    value: float
    margin: float
    order: float


def observed_order(coarse: float, mid: float, fine: float, ratio: float = 2.0) -> float:
    d1, d2 = coarse - mid, mid - fine
    if d1 == 0 or d2 == 0 or d1 / d2 <= 1.0:
        return math.nan
    return math.log(d1 / d2) / math.log(ratio)


def richardson(values: Sequence[float], ratio: float = 2.0, order: float | None = None) -> Extrapolation:
    """Extrapolate a sequence computed on meshes refined by ``ratio`` each step.

    With three or more values the order is estimated from the last three and
    clamped to ``[1, 4]``; otherwise ``order`` (default :data:`CORNER_ORDER`)
    is used. ``margin`` is the Richardson estimate ``|fine - extrapolated|``
    of the finest value's discretization error.
    """
    v = [float(x) for x in values]
    if len(v) < 2:
        raise ValueError("need at least two refinement levels")
    if order is None:
        p = observed_order(*v[-3:], ratio=ratio) if len(v) >= 3 else math.nan
        order = CORNER_ORDER if math.isnan(p) else min(max(p, 1.0), 4.0)
    corr = (v[-1] - v[-2]) / (ratio**order - 1.0)
    return Extrapolation(value=v[-1] + corr, margin=abs(corr), order=order)


def aitken_box(Ls: Sequence[float], Es: Sequence[float], noise: float = 0.0) -> Extrapolation:
    """Exponential-in-L extrapolation over three equally spaced box sizes.

    Falls back to the largest box (with margin the last difference) when the
    differences are at noise level or not geometrically decaying.
    """
    if len(Ls) != 3 or len(Es) != 3:
        raise ValueError("need exactly three box sizes")
    L1, L2, L3 = Ls
    if not math.isclose(L2 - L1, L3 - L2, rel_tol=1e-9):
        raise ValueError(f"box sizes must be equally spaced, got {Ls}")
    E1, E2, E3 = Es
    d1, d2 = E1 - E2, E2 - E3
    if abs(d2) <= noise or d1 == 0 or not 0.0 < d2 / d1 < 1.0:
        return Extrapolation(value=E3, margin=max(abs(d2), noise), order=math.nan)
    q = d2 / d1
    corr = -d2 * q / (1.0 - q)
    kappa = -math.log(q) / (L2 - L1)
    return Extrapolation(value=E3 + corr, margin=abs(corr), order=kappa)


@dataclass
class GroundStateEstimate:
    alpha: float
    d: float
    L: float
    m: int
    value: float  # extrapolated infinite-volume, continuum ground-state energy
    margin: float
    h_order: float
    mesh_values: dict = field(default_factory=dict)  # m -> E^{L,h}_0
    box_values: dict = field(default_factory=dict)  # L -> E_0 on the coarsest mesh


def ground_state_limit(
    alpha: float,
    d: float,
    L: float,
    m: int,
    *,
    levels: int = 3,
    box_step: float | None = None,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    **solver,
) -> GroundStateEstimate:
    """Extrapolated ``inf spec H_alpha`` from finite boxes and nested meshes.

    Meshes ``m / 2**(levels-1), ..., m`` at box ``L`` give the h-correction;
    boxes ``L - 2 step, L - step, L`` on the coarsest mesh give the
    L-correction. The two corrections are added to the finest value.
    """
    ms = [m // 2**k for k in reversed(range(levels))]
    if ms[0] < 2 or any(ms[i + 1] != 2 * ms[i] for i in range(levels - 1)):
        raise ValueError(f"m={m} cannot be halved {levels - 1} times")
    geom = StripGeometry(d, L)
    mesh_values = {}
    for mm in ms:
        forms = assemble(build_mesh(geom, mm), alpha)
        mesh_values[mm] = smallest_eigenpairs(forms, 1, tol, seed=seed, **solver).ground
    h = richardson([mesh_values[mm] for mm in ms])

    step = box_step if box_step is not None else L / 4
    Ls = [L - 2 * step, L - step, L]
    if Ls[0] <= d:
        raise ValueError(f"box sizes {Ls} must all exceed d={d}")
    box_values = {}
    for LL in Ls[:2]:
        forms = assemble(build_mesh(StripGeometry(d, LL), ms[0]), alpha)
        box_values[LL] = smallest_eigenpairs(forms, 1, tol, seed=seed, **solver).ground
    box_values[L] = mesh_values[ms[0]]
    noise = 10 * tol * (1 + abs(box_values[L]))
    box = aitken_box(Ls, [box_values[x] for x in Ls], noise=noise)

    value = mesh_values[m] + (h.value - mesh_values[m]) + (box.value - box_values[L])
    return GroundStateEstimate(
        alpha=alpha, d=d, L=L, m=m, value=value, margin=h.margin + box.margin,
        h_order=h.order, mesh_values=mesh_values, box_values=box_values,
    )
