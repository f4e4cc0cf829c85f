"""Characteristic scales, homological matching, and void certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, StructuralError
from .homology import Dot, PersistenceDiagram, transition_kernel

__all__ = [
    "ScaleReport",
    "MatchReport",
    "VoidCertificate",
    "lambda_scales",
    "check_lsm",
    "homological_match",
    "lambda_hi",
    "void_certificates",
]

INF = math.inf
# radii closer than this are the same scale (regular fixtures repeat chord lengths)
TIE_TOL = 1e-9


@dataclass(frozen=True)
class ScaleReport:
    lambda_ball: float
    lambda_sup: float
    lambda_lo: float
    lambda_hi: float
    hm_horizon: float | None

    def invariant_violations(self) -> list:
        out = []
        if math.isfinite(self.lambda_sup):
            if not self.lambda_lo < self.lambda_sup:
                out.append("lambda_lo < lambda_sup")
            if not self.lambda_ball < self.lambda_sup:
                out.append("lambda_ball < lambda_sup")
            if math.isfinite(self.lambda_hi) and not self.lambda_sup < self.lambda_hi:
                out.append("lambda_sup < lambda_hi")
        return out


def lambda_scales(table) -> tuple:
    """``(lambda_lo, lambda_sup)`` from a parallax edge table.

    ``lambda_sup`` is the smallest radius of a blocked edge (``inf`` when
    none is blocked); ``lambda_lo`` is the largest edge radius below it, or 0.
    Radii within ``TIE_TOL`` of ``lambda_sup`` count as equal to it.
    """
    rho = np.asarray(table.rho_V)
    blocked = np.asarray(table.blocked, dtype=bool)
    lam_sup = float(rho[blocked].min()) if blocked.any() else INF
    below = rho[rho < lam_sup - TIE_TOL]
    lam_lo = float(below.max()) if below.size else 0.0
    return lam_lo, lam_sup


def check_lsm(table, lam: float) -> bool:
    """True iff no blocked edge has radius ``<= lam``."""
    rho = np.asarray(table.rho_V)
    blocked = np.asarray(table.blocked, dtype=bool)
    return not bool(np.any(blocked & (rho <= lam)))


def _correspond(diag_R: PersistenceDiagram, diag_L: PersistenceDiagram, dim, lam) -> dict:
    """Pair dots born by ``lam`` in both diagrams through their birth simplex."""
    early_R = {d.birth_simplex: d for d in diag_R.in_dim(dim) if d.birth <= lam}
    early_L = {d.birth_simplex: d for d in diag_L.in_dim(dim) if d.birth <= lam}
    if len(early_R) != len([d for d in diag_R.in_dim(dim) if d.birth <= lam]):
        raise StructuralError("two dots share a birth simplex")
    if set(early_R) != set(early_L):
        only = sorted(set(early_R) ^ set(early_L))
        raise StructuralError(
            f"dots born by {lam} differ between the diagrams at {only[:5]}; the scale is not locally matched"
        )
    for key, d in early_R.items():
        if d.birth != early_L[key].birth:
            raise StructuralError(f"birth of {key} differs between the diagrams; the scale is not locally matched")
    return {k: (early_R[k], early_L[k]) for k in early_R}


@dataclass
class MatchReport:
    holds: bool
    matched: list = field(default_factory=list)
    violating: list = field(default_factory=list)
    lam: float = 0.0
    delta: float = 0.0
    omega: float = INF

    def __bool__(self):
        return self.holds


def _dies_by(death, omega):
    return math.isfinite(death) and death <= omega


def homological_match(diag_R, diag_L, dim, lam, delta, omega=INF) -> MatchReport:
    """Kernel containment ``ker HR(lam -> delta)  in  ker HL(lam -> omega)``.

    Every dot of ``diag_R`` alive at ``lam`` and dead by ``delta`` must have
    its counterpart in ``diag_L`` dead by ``omega``. With ``dim=None`` all
    dimensions of ``diag_R`` are checked.
    """
    if not lam <= delta <= omega:
        raise InputError("homological matching needs lam <= delta <= omega")
    dims = diag_R.dims() if dim is None else [dim]
    report = MatchReport(True, lam=lam, delta=delta, omega=omega)
    for k in dims:
        pairs = _correspond(diag_R, diag_L, k, lam)
        kernel = transition_kernel(diag_R, k, lam, delta)
        for dot in kernel:
            other = pairs[dot.birth_simplex][1]
            if _dies_by(other.death, omega):
                report.matched.append((dot, other))
            else:
                report.violating.append((dot, other))
    report.holds = not report.violating
    return report


def lambda_hi(diag_R, diag_L, dim, lambda_lo, lambda_sup, filtration_values=None) -> tuple:
    """Smallest and largest candidate ``delta`` at which ``(lambda_lo, delta, inf)``-matching holds.

    Candidates are the R-death values above ``lambda_sup`` plus the first
    realized filtration value above it (``filtration_values``, defaulting to
    the finite births and deaths of ``diag_R``). Returns
    ``(lambda_hi, hm_horizon)``: ``lambda_hi`` is ``inf`` when no candidate
    passes, and ``hm_horizon`` is ``inf`` when none fails and ``None`` when
    none passes.
    """
    if not math.isfinite(lambda_sup):
        raise InputError("lambda_hi needs a finite lambda_sup")
    if filtration_values is None:
        filtration_values = [v for d in diag_R.dots for v in (d.birth, d.death) if math.isfinite(v)]
    vals = np.asarray(filtration_values, dtype=float)
    floor = lambda_sup + TIE_TOL
    above = vals[np.isfinite(vals) & (vals > floor)]
    dims = diag_R.dims() if dim is None else [dim]
    deaths = [d.death for k in dims for d in diag_R.in_dim(k) if math.isfinite(d.death) and d.death > floor]
    cands = sorted(set(deaths) | ({float(above.min())} if above.size else set()))
    passing, failed = [], False
    for delta in cands:
        if homological_match(diag_R, diag_L, dim, lambda_lo, delta, INF).holds:
            passing.append(delta)
        else:
            failed = True
    if not passing:
        return INF, None
    return passing[0], (INF if not failed else passing[-1])


@dataclass(frozen=True)
class VoidCertificate:
    """Evidence that the model has a void disrupting the death of a class.

    ``r_max`` bounds the radius of a ball inside that void; it is ``inf``
    when the class never dies along the path.
    """

    dim: int
    birth: float
    death_R: float
    death_path: float
    path: str
    blocking_edge: tuple | None
    r_max: float

    @property
    def certifies_void(self) -> bool:
        return not math.isfinite(self.death_path)


def void_certificates(diag_R, diag_path, dim, lambda_lo, path="inflexible", edge_values=None) -> list:
    """Certificates for classes born before ``lambda_lo`` that die later along the path.

    ``edge_values`` maps ``(i, j)`` to the ambient edge radius and is used to
    name the edge that killed the class in the ambient filtration.
    """
    if lambda_lo <= 0:
        return []
    early_R = {d.birth_simplex: d for d in diag_R.in_dim(dim) if d.birth < lambda_lo}
    early_P = {d.birth_simplex: d for d in diag_path.in_dim(dim) if d.birth < lambda_lo}
    out = []
    for key, r_dot in sorted(early_R.items(), key=lambda kv: kv[1]):
        p_dot = early_P.get(key)
        if p_dot is None:
            raise StructuralError(f"no path dot corresponds to {key}")
        c, d = r_dot.death, p_dot.death
        if not d > c:
            continue
        r_max = 2.0 * (d - c) / (math.pi - 2.0) if math.isfinite(d) else INF
        out.append(
            VoidCertificate(dim, r_dot.birth, c, d, path, _killing_edge(r_dot, edge_values), r_max)
        )
    return out


def _killing_edge(dot: Dot, edge_values):
    s = dot.death_simplex
    if s is None:
        return None
    if len(s) == 2:
        return tuple(s)
    edges = [(s[a], s[b]) for a in range(len(s)) for b in range(a + 1, len(s))]
    if edge_values is None:
        return None
    return max(edges, key=lambda e: (edge_values[e], e))
