"""Spectral comparison reports across the three dual formulations.

The duality report solves the ordered-sector Robin problem, the
delta-type boson problem, and the epsilon-type fermion problem on a
ladder of grid refinements, tabulates the lowest eigenvalues, the
pairwise relative deviations, empirical convergence orders, and the
boson-fermion eigenvector map check.  The scale-invariance report
verifies that with couplings proportional to the hyperradius the
spectrum scales exactly as the inverse square of a box dilation and is
translation invariant, while any fixed coupling length breaks the
scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingModel, robin, uniform_model
from .errors import UnsupportedCoupling
from .operators import (
    DomainSpec,
    GridOperator,
    SpectrumResult,
    cached_build,
    content_hash,
    solve,
)

FORMULATIONS = ("sector", "delta_bose", "epsilon_fermi")

#: Levels closer than this (relative to the spectral scale) are treated as
#: degenerate and compared through subspaces, not individual vectors.
DEGENERACY_GAP = 1e-8


def convergence_order(coarse, mid, fine, ratio: float = 2.0):
    """Empirical order from three values on grids refined by ``ratio``."""
    d1 = abs(coarse - mid)
    d2 = abs(mid - fine)
    if d2 == 0.0 or d1 == 0.0:
        return None
    return float(np.log(d1 / d2) / np.log(ratio))


def richardson_extrapolate(mid, fine, order: float, ratio: float = 2.0):
    return fine + (fine - mid) / (ratio**order - 1.0)


def _strict_overlap(op: GridOperator, v_bose: np.ndarray, v_fermi: np.ndarray) -> float:
    """Overlap of the mapped boson vector with the fermion vector.

    Both reduced vectors hold values on descending representatives; on a
    strict node x the boson extension is v[sorted x], the fermion one
    sgn(sigma_x) v[sorted x], and the pair-sign product equals
    sgn(sigma_x).  After multiplying the boson values by the sign
    product, the two full-grid functions have the inner product below
    (restricted to strict nodes; every strict orbit carries the same
    weight, so the reduced mass works as the node weight).
    """
    strict = np.all(op.dofs[:, :-1] > op.dofs[:, 1:], axis=-1)
    w = op.mass[strict]
    b = v_bose[strict]
    f = v_fermi[strict]
    num = abs(np.sum(w * np.conj(b) * f))
    den = math.sqrt(float(np.sum(w * np.abs(b) ** 2) * np.sum(w * np.abs(f) ** 2)))
    return float(num / den)


def bf_overlap_deviations(delta_res: SpectrumResult, fermi_res: SpectrumResult):
    """Per-level deviation 1 - |<mapped psi_B, psi_F>| at the finest grid.

    Nearly degenerate levels are grouped and compared through the
    smallest principal overlap of the two subspaces.
    """
    vals = delta_res.eigenvalues
    scale = float(np.max(np.abs(vals))) or 1.0
    groups = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > DEGENERACY_GAP * scale:
            groups.append(list(range(start, i)))
            start = i
    op = delta_res.operator
    strict = np.all(op.dofs[:, :-1] > op.dofs[:, 1:], axis=-1)
    w = op.mass[strict]
    out = []
    def orthonormalize(v):
        gram = v.T @ (w[:, None] * v)
        chol = np.linalg.cholesky(gram)
        return v @ np.linalg.inv(chol).T

    for group in groups:
        vb = orthonormalize(delta_res.vectors[strict][:, group])
        vf = orthonormalize(fermi_res.vectors[strict][:, group])
        # singular values of the cross overlap are the principal cosines
        # between the two subspaces
        cross = vb.T @ (w[:, None] * vf)
        sv = np.linalg.svd(cross, compute_uv=False)
        deviation = max(float(1.0 - np.min(sv)), 0.0)
        for idx in group:
            out.append({"level_index": idx, "eigenvalue": float(vals[idx]),
                        "group_size": len(group), "overlap_deviation": deviation})
    return out


@dataclass
class DualityReport:
    dom: DomainSpec
    model: CouplingModel
    k: int
    refinements: int
    levels: list = field(default_factory=list)
    pair_deviations: dict = field(default_factory=dict)
    pair_deviation_orders: dict = field(default_factory=dict)
    eigenvalue_orders: dict = field(default_factory=dict)
    extrapolated: dict = field(default_factory=dict)
    bf_check: list = field(default_factory=list)

    @property
    def hash(self) -> str:
        return content_hash(self.dom, self.model)

    def finest(self, formulation: str) -> np.ndarray:
        return np.asarray(self.levels[-1]["eigenvalues"][formulation])

    def to_dict(self) -> dict:
        return {
            "kind": "duality_report",
            "domain": self.dom.label(),
            "model": self.model.label(),
            "k": self.k,
            "refinements": self.refinements,
            "content_hash": self.hash,
            "levels": self.levels,
            "pair_deviations": {"|".join(k): v for k, v in self.pair_deviations.items()},
            "pair_deviation_orders": {"|".join(k): v for k, v in self.pair_deviation_orders.items()},
            "eigenvalue_orders": self.eigenvalue_orders,
            "extrapolated": self.extrapolated,
            "bf_check": self.bf_check,
        }

    def table_rows(self):
        """Flat rows: formulation, level, h, index, eigenvalue, residual."""
        rows = []
        for lv in self.levels:
            for form in FORMULATIONS:
                for i, (e, r) in enumerate(zip(lv["eigenvalues"][form],
                                               lv["residuals"][form])):
                    rows.append((form, lv["level"], lv["h"], i, e, r))
        return rows


def duality_report(dom: DomainSpec, model: CouplingModel, k: int,
                   refinements: int = 3, tol: float = 1e-10,
                   seed: int = 0) -> DualityReport:
    """Compare the three formulations on a ladder of grid refinements."""
    report = DualityReport(dom=dom, model=model, k=k, refinements=refinements)
    results_by_level = []
    for level in range(refinements):
        dom_l = dom.refined(2**level)
        results = {}
        for form in FORMULATIONS:
            op = cached_build(form, dom_l, model)
            results[form] = solve(op, k, tol=tol, seed=seed)
        results_by_level.append(results)
        report.levels.append({
            "level": level,
            "points": dom_l.points,
            "h": dom_l.spacing,
            "eigenvalues": {f: results[f].eigenvalues.tolist() for f in FORMULATIONS},
            "residuals": {f: results[f].residuals.tolist() for f in FORMULATIONS},
        })

    pairs = [(a, b) for i, a in enumerate(FORMULATIONS) for b in FORMULATIONS[i + 1:]]
    for a, b in pairs:
        devs = []
        for lv in report.levels:
            ea = np.asarray(lv["eigenvalues"][a])
            eb = np.asarray(lv["eigenvalues"][b])
            rel = np.abs(ea - eb) / np.maximum.reduce(
                [np.abs(ea), np.abs(eb), np.full_like(ea, 1e-12)])
            devs.append(float(np.max(rel)))
        report.pair_deviations[(a, b)] = devs
        orders = []
        for i in range(len(devs) - 2):
            if min(devs[i], devs[i + 1], devs[i + 2]) < 1e-13:
                orders.append(None)  # structurally identical pair
            else:
                ratio = devs[i + 1] / devs[i + 2] if devs[i + 2] else None
                orders.append(None if not ratio else float(np.log2(devs[i] / devs[i + 1])))
        report.pair_deviation_orders[(a, b)] = orders

    if refinements >= 3:
        for form in FORMULATIONS:
            per_index = []
            extrap = []
            for i in range(k):
                triple = [report.levels[m]["eigenvalues"][form][i]
                          for m in (refinements - 3, refinements - 2, refinements - 1)]
                p = convergence_order(*triple)
                per_index.append(p)
                extrap.append(richardson_extrapolate(triple[1], triple[2], p)
                              if p is not None else triple[2])
            report.eigenvalue_orders[form] = per_index
            report.extrapolated[form] = extrap

    report.bf_check = bf_overlap_deviations(results_by_level[-1]["delta_bose"],
                                            results_by_level[-1]["epsilon_fermi"])
    return report


@dataclass
class ScaleInvarianceReport:
    dom: DomainSpec
    model: CouplingModel
    dilation: float
    k: int
    base: dict = field(default_factory=dict)
    dilated: dict = field(default_factory=dict)
    scaled_deviation: dict = field(default_factory=dict)
    translation_deviation: dict = field(default_factory=dict)
    control_deviation: dict = field(default_factory=dict)
    control_model: CouplingModel = None

    def to_dict(self) -> dict:
        return {
            "kind": "scale_invariance_report",
            "domain": self.dom.label(),
            "model": self.model.label(),
            "control_model": self.control_model.label() if self.control_model else None,
            "dilation": self.dilation,
            "k": self.k,
            "base": self.base,
            "dilated": self.dilated,
            "scaled_deviation": self.scaled_deviation,
            "translation_deviation": self.translation_deviation,
            "control_deviation": self.control_deviation,
        }


def scale_invariance_report(dom: DomainSpec, model: CouplingModel, dilation: float,
                            k: int, control_model: CouplingModel = None,
                            translation: float = None, tol: float = 1e-10,
                            seed: int = 0) -> ScaleInvarianceReport:
    """Dilation, translation, and negative-control spectra for n = 3.

    The box provides the only length scale of the scale-invariant model,
    so dilating it by lambda at fixed node count must rescale every
    eigenvalue by 1/lambda^2; a constant coupling length breaks this.
    """
    if dom.n != 3:
        raise UnsupportedCoupling("scale-invariance report is defined for n = 3")
    if not model.has_scale_invariant:
        raise UnsupportedCoupling("model must contain scale-invariant couplings")
    if control_model is None:
        control_model = uniform_model(dom.n, robin(-1.0))
    if translation is None:
        translation = 0.37 * dom.length

    report = ScaleInvarianceReport(dom=dom, model=model, dilation=dilation, k=k,
                                   control_model=control_model)
    dom_dilated = DomainSpec(dom.n, dom.length * dilation, dom.points,
                             dom.confinement, dom.omega, dom.offset)
    dom_shifted = DomainSpec(dom.n, dom.length, dom.points, dom.confinement,
                             dom.omega, dom.offset + translation)

    for form in FORMULATIONS:
        base = solve(cached_build(form, dom, model), k, tol=tol, seed=seed).eigenvalues
        dil = solve(cached_build(form, dom_dilated, model), k, tol=tol, seed=seed).eigenvalues
        shift = solve(cached_build(form, dom_shifted, model), k, tol=tol, seed=seed).eigenvalues
        cb = solve(cached_build(form, dom, control_model), k, tol=tol, seed=seed).eigenvalues
        cd = solve(cached_build(form, dom_dilated, control_model), k, tol=tol, seed=seed).eigenvalues
        rel = lambda x, y: np.max(np.abs(x - y) / np.maximum(np.abs(x), 1e-12))
        report.base[form] = base.tolist()
        report.dilated[form] = dil.tolist()
        report.scaled_deviation[form] = float(rel(base, dil * dilation**2))
        report.translation_deviation[form] = float(rel(base, shift))
        report.control_deviation[form] = float(rel(cb, cd * dilation**2))
    return report
