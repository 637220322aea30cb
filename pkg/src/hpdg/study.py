"""Convergence studies: mesh sweep, solve, error table and file export."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import ConvergenceTable, ErrorReport, error_report, error_space
from .assembly import DgConfig, assemble
from .cases import BUILTIN_CASES, MmsCase
from .config import StudyConfig
from .linsolve import SolveReport, solve
from .mesh import build_structured, classify_boundary
from .space import DgSpace

log = logging.getLogger(__name__)

CSV_COLUMNS = ("level", "h", "n_dof", "l2_error", "energy_error", "l2_rate", "energy_rate", "iterations")


class SolverFailure(RuntimeError):
    def __init__(self, level: int, report: SolveReport):
        super().__init__(f"solver did not converge at level {level}: {report}")
        self.level = level
        self.report = report


@dataclass
class LevelResult:
    error: ErrorReport
    solve: SolveReport
    seconds: float


@dataclass
class StudyResult:
    config: StudyConfig
    levels: list[LevelResult] = field(default_factory=list)
    complete: bool = False
    csv_path: Optional[Path] = None
    plot_paths: dict = field(default_factory=dict)

    @property
    def table(self) -> ConvergenceTable:
        return ConvergenceTable([lv.error for lv in self.levels], degree=self.config.degree)


def dg_config(cfg: StudyConfig) -> DgConfig:
    return DgConfig(alpha=cfg.alpha, beta=cfg.beta, gamma=cfg.gamma, degree=cfg.degree,
                    superpenalty_d=cfg.superpenalty_d)


def resolve_case(cfg: StudyConfig, case: Optional[MmsCase] = None) -> MmsCase:
    if case is not None:
        return case
    if cfg.case == "custom":
        raise ValueError("case 'custom' needs an MmsCase passed to run_study")
    return BUILTIN_CASES[cfg.case](cfg.material)


def solve_level(level: int, dg: DgConfig, case: MmsCase, tol: float, solver: str = "auto"):
    """Build, assemble and solve one level; returns ``(mesh, coeffs, report)``."""
    mesh = classify_boundary(build_structured(level, case.domain), case.dirichlet)
    space = DgSpace(mesh, dg.degree)
    system = assemble(mesh, dg, case.problem(), space=space)
    x, rep = solve(system, symmetric_hint=dg.alpha == -1, tol=tol, method=solver)
    return mesh, x, rep


def _fmt_err(x: float) -> str:
    return f"{x:.6g}"


def _fmt_rate(x: float) -> str:
    return f"{x:.3g}"


def csv_rows(levels: list[LevelResult]) -> list[list[str]]:
    """Formatted CSV data rows.

    Rates are computed from the rounded error strings so that a reader
    recomputing them from the file gets the same digits.
    """
    rows = []
    prev = None
    for lv in levels:
        e = lv.error
        l2, en = _fmt_err(e.l2_error), _fmt_err(e.energy_error)
        if prev is None:
            r2 = re = ""
        else:
            r2 = _fmt_rate(math.log2(float(prev[0]) / float(l2)))
            re = _fmt_rate(math.log2(float(prev[1]) / float(en)))
        rows.append([str(e.level), repr(e.h), str(e.n_dof), l2, en, r2, re, str(lv.solve.iterations)])
        prev = (l2, en)
    return rows


def write_csv(path: Path, cfg: StudyConfig, levels: list[LevelResult], complete: bool) -> None:
    lines = [f"# {k} = {v}" for k, v in cfg.echo()]
    lines.append(",".join(CSV_COLUMNS))
    lines += [",".join(r) for r in csv_rows(levels)]
    lines.append(f"# status = {'complete' if complete else 'incomplete'}")
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[dict, list[dict]]:
    """Read a study CSV back as ``(echoed config, rows)``."""
    meta, rows, header = {}, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].partition("=")
            meta[k.strip()] = v.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append(dict(zip(header, line.split(","))))
    return meta, rows


def write_plot_data(out_dir: Path, stem: str, levels: list[LevelResult]) -> dict:
    """One ``(ln h, ln error)`` file per norm."""
    paths = {}
    for norm in ("l2", "energy"):
        p = out_dir / f"{stem}_{norm}.dat"
        body = [f"# ln_h ln_{norm}_error"]
        for lv in levels:
            e = getattr(lv.error, f"{norm}_error")
            body.append(f"{math.log(lv.error.h):.12g} {math.log(e):.12g}")
        p.write_text("\n".join(body) + "\n")
        paths[norm] = p
    return paths


def run_study(cfg: StudyConfig, case: Optional[MmsCase] = None, out_dir=None, write: bool = True,
              solver: str = "auto", echo=None) -> StudyResult:
    """Run every configured level in order and export the results.

    Raises :class:`SolverFailure` after writing a CSV marked incomplete
    if a level does not converge.  ``echo`` receives one formatted line
    per level.
    """
    case = resolve_case(cfg, case)
    dg = dg_config(cfg)
    result = StudyResult(cfg)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    stem = f"{cfg.method}_r{cfg.degree}_d{cfg.superpenalty_d}"
    if write:
        out.mkdir(parents=True, exist_ok=True)
        result.csv_path = out / f"{stem}.csv"

    for level in cfg.levels:
        t0 = time.perf_counter()
        mesh, x, rep = solve_level(level, dg, case, cfg.tol, solver)
        if not rep.converged:
            if write:
                write_csv(result.csv_path, cfg, result.levels, complete=False)
            raise SolverFailure(level, rep)
        err = error_report(error_space(mesh, cfg.degree), dg, case.material, x, case.u, case.grad)
        lv = LevelResult(err, rep, time.perf_counter() - t0)
        result.levels.append(lv)
        log.info("level %d: l2 %.3e energy %.3e (%s, %d its, %.2fs)", level, err.l2_error,
                 err.energy_error, rep.method, rep.iterations, lv.seconds)
        if echo is not None:
            echo(format_level(lv))

    result.complete = True
    if write:
        write_csv(result.csv_path, cfg, result.levels, complete=True)
        result.plot_paths = write_plot_data(out, stem, result.levels)
    return result


def format_header() -> str:
    return (f"{'level':>5} {'h':>9} {'n_dof':>8} {'l2_error':>12} {'energy_error':>12} "
            f"{'solver':>8} {'its':>6} {'time[s]':>8}")


def format_level(lv: LevelResult) -> str:
    e, s = lv.error, lv.solve
    return (f"{e.level:>5} {e.h:>9.5g} {e.n_dof:>8} {e.l2_error:>12.5e} {e.energy_error:>12.5e} "
            f"{s.method:>8} {s.iterations:>6} {lv.seconds:>8.2f}")


def format_rates(table: ConvergenceTable) -> str:
    if not len(table.l2_rates):
        return "rates: (single level)"
    l2 = " ".join(f"{r:.3f}" for r in table.l2_rates)
    en = " ".join(f"{r:.3f}" for r in table.energy_rates)
    return (f"L2 rates:     {l2}   (expected {table.expected_l2_rate:g})\n"
            f"energy rates: {en}   (expected {table.expected_energy_rate:g})")
