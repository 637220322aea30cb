"""Quick property checks run by ``hpdg --verify``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import energy_error, energy_norm_squared, error_space
from .assembly import DgConfig, assemble, assemble_matrix, bilinear_apply, residual_flux
from .basis import edge_rule, reference_basis, triangle_rule
from .cases import builtin_case_linear, builtin_case_paper, fd_body_force
from .config import StudyConfig
from .linsolve import solve
from .mesh import build_structured
from .space import DgSpace
from .study import dg_config


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _mesh_invariants(cfg):
    worst = 0.0
    for level in (1, 2):
        m = build_structured(level)
        area_err = abs(m.areas().sum() - 4.0) / 4.0
        euler = len(m.vertices) - m.n_edges + m.n_elements
        if euler != 1 or np.any(m.areas() <= 0):
            return False, f"level {level}: euler {euler}"
        worst = max(worst, area_err)
    return worst < 1e-12, f"area rel. error {worst:.1e}, euler = 1"


def _quadrature(cfg):
    from math import factorial

    r = cfg.degree
    order = 2 * r + 2
    rule = triangle_rule(order)
    worst = 0.0
    for a in range(order + 1):
        for b in range(order + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            got = rule.weights @ (rule.points[:, 0] ** a * rule.points[:, 1] ** b)
            worst = max(worst, abs(got - exact) / exact)
    er = edge_rule(2 * r + 3)
    worst = max(worst, abs(er.weights.sum() - 1.0))
    return worst < 1e-12, f"max monomial rel. error {worst:.1e} (order {order})"


def _nodal_basis(cfg):
    b = reference_basis(cfg.degree)
    dev = np.abs(b.values(b.nodes) - np.eye(b.n_local)).max()
    return dev < 1e-10, f"max |phi_i(x_j) - delta_ij| = {dev:.1e}"


def _mms_forcing(cfg):
    case = builtin_case_paper(cfg.material)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(20, 2))
    dev = max(np.abs(fd_body_force(case, x, y) - case.f(x, y)).max() for x, y in pts)
    return dev < 1e-6, f"max |f - fd(-div sigma)| = {dev:.1e}"


def _sipg_symmetry(cfg):
    dg = DgConfig(alpha=-1, beta=cfg.beta, gamma=cfg.gamma, degree=cfg.degree)
    worst = 0.0
    for level in (1, 2):
        m = build_structured(level)
        A = assemble_matrix(DgSpace(m, cfg.degree), dg, cfg.material)
        worst = max(worst, abs(A - A.T).max() / abs(A).max())
    return worst < 1e-12, f"max |A - A^T| / max |A| = {worst:.1e}"


def _nipg_identity(cfg):
    dg = DgConfig(alpha=1, beta=cfg.beta, gamma=cfg.gamma, degree=cfg.degree,
                  superpenalty_d=cfg.superpenalty_d)
    space = DgSpace(build_structured(2), cfg.degree)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        w = rng.standard_normal(space.n_dof)
        b = bilinear_apply(space, dg, cfg.material, w, w)
        e = energy_norm_squared(space, dg, cfg.material, w)
        worst = max(worst, abs(b - e) / e)
    return worst < 1e-10, f"max |B(w,w) - |||w|||^2| / |||w|||^2 = {worst:.1e}"


def _coercivity(cfg):
    space = DgSpace(build_structured(2), cfg.degree)
    rng = np.random.default_rng(2)
    lowest = np.inf
    for alpha in (-1, 0, 1):
        dg = DgConfig(alpha=alpha, beta=cfg.beta, gamma=cfg.gamma, degree=cfg.degree)
        A = assemble_matrix(space, dg, cfg.material)
        for _ in range(10):
            w = rng.standard_normal(space.n_dof)
            lowest = min(lowest, (w @ (A @ w)) / energy_norm_squared(space, dg, cfg.material, w))
    return lowest > 0, f"min B(w,w) / |||w|||^2 = {lowest:.3g}"


def _patch_test(cfg):
    case = builtin_case_linear(cfg.material)
    m = build_structured(1)
    worst = 0.0
    for alpha in (-1, 0, 1):
        dg = DgConfig(alpha=alpha, beta=cfg.beta, gamma=cfg.gamma, degree=cfg.degree)
        system = assemble(m, dg, case.problem())
        x, rep = solve(system, symmetric_hint=alpha == -1, method="direct")
        err, _, _ = energy_error(error_space(m, cfg.degree), dg, case.material, x, case.u, case.grad)
        worst = max(worst, err)
    return worst < 1e-9, f"max energy error for u = (x, y): {worst:.1e}"


def _local_equilibrium(cfg):
    case = builtin_case_paper(cfg.material)
    dg = dg_config(cfg)
    m = build_structured(2)
    space = DgSpace(m, cfg.degree)
    system = assemble(m, dg, case.problem(), space=space)
    x, rep = solve(system, symmetric_hint=dg.alpha == -1, tol=cfg.tol, method="auto")
    defect = np.linalg.norm(residual_flux(space, dg, case.problem(), x), axis=1).max()
    return defect < 1e-7, f"max element defect {defect:.1e} ({cfg.method}, level 2)"


CHECKS: list[tuple[str, Callable]] = [
    ("mesh area and Euler characteristic", _mesh_invariants),
    ("quadrature exactness", _quadrature),
    ("nodal basis property", _nodal_basis),
    ("manufactured forcing vs finite differences", _mms_forcing),
    ("SIPG matrix symmetry", _sipg_symmetry),
    ("NIPG energy identity", _nipg_identity),
    ("coercivity on random fields", _coercivity),
    ("patch test u = (x, y)", _patch_test),
    ("local equilibrium", _local_equilibrium),
]


def run_checks(cfg: StudyConfig) -> list[CheckResult]:
    out = []
    for name, check in CHECKS:
        try:
            ok, detail = check(cfg)
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
