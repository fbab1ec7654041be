from __future__ import annotations
from collections import Counter

import numpy as np

from .rays import VisibilityReport


def render_visibility(report: VisibilityReport) -> str:
    lines = ["# Visibility", "",
             f"stability_ok: {str(report.stability_ok).lower()}",
             f"coverage_fraction: {report.coverage_fraction:.6f}",
             f"samples: {report.n_samples}",
             f"uncovered: {len(report.uncovered_samples)}", "", "## Uniqueness per rotation"]
    for j, ok in enumerate(report.uniqueness_ok):
        lines.append(f"- rotation {j}: {'ok' if ok else 'violated'}")
    if report.uncovered_samples:
        lines += ["", "## First uncovered (x, y, xi_x, xi_y)"]
        for s in report.uncovered_samples[:20]:
            lines.append("- " + ", ".join(f"{v:+.4f}" for v in s))
    return "\n".join(lines) + "\n"


def write_spectrum_csv(path: str, singular_values: np.ndarray) -> None:
    s = np.asarray(singular_values, dtype=float)
    np.savetxt(path, np.column_stack([np.arange(s.size), s]), fmt=["%d", "%.17g"], delimiter=",",
               header="index,singular_value", comments="")


def write_history_csv(path: str, history) -> None:
    """Errors are nan when the run had no ground truth."""
    rows = np.array([[r.k, r.residual, r.l2_error, r.h1_error] for r in history],
                    dtype=float).reshape(-1, 4)
    np.savetxt(path, rows, fmt=["%d", "%.17g", "%.17g", "%.17g"], delimiter=",",
               header="k,residual,l2_error,h1_error", comments="")


def render_stability(report) -> str:
    lines = ["# Stability sweep", "",
             f"- pairs: {report.pairs_tested}",
             f"- poincare constant: {report.poincare:.6g}",
             f"- max ratio: {'n/a' if report.c_star is None else f'{report.c_star:.6g}'}",
             f"- excluded (zero field difference): {len(report.excluded)}",
             f"- injectivity violations: {len(report.injectivity_violations)}", "",
             "| pair | field H1 | data H1 | ratio | smallness margin |",
             "|---|---|---|---|---|"]
    for k in range(report.pairs_tested):
        ratio = report.ratios[k]
        lines.append(f"| {k} | {report.field_norms[k]:.4e} | {report.data_norms[k]:.4e} | "
                     f"{'-' if ratio is None else f'{ratio:.4e}'} | {report.margins[k]:.4e} |")
    return "\n".join(lines) + "\n"


def render_selftest(results) -> str:
    verdicts = Counter("pass" if r.passed else "fail" for r in results)
    lines = ["# Self-test", "",
             f"- pass: {verdicts.get('pass', 0)}", f"- fail: {verdicts.get('fail', 0)}", ""]
    for r in results:
        lines.append(f"## [{'PASS' if r.passed else 'FAIL'}] {r.name}")
        lines.append(f"- criterion: {r.criterion}")
        lines.append(f"- seconds: {r.seconds:.2f}")
        for k, v in r.metrics.items():
            lines.append(f"- {k}: {v}")
        if r.detail:
            lines.append(f"- note: {r.detail}")
        lines.append("")
    return "\n".join(lines)
