"""Pearson correlation with significance testing, and CAI-based model selection.

The two-tailed p-value comes from the Student-t distribution evaluated through
the regularized incomplete beta function, computed in-repo by a modified-Lentz
continued fraction so the numeric core stays dependency-free.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

_FPMIN = 1e-300
_MAX_ITER = 300


def _beta_continued_fraction(a: float, b: float, x: float, rtol: float) -> float:
    """Modified Lentz evaluation of the continued fraction for I_x(a, b)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + numerator / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + numerator / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < rtol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float, rtol: float = 1e-12) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError(f"a and b must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fastest below the distribution mean;
    # use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) above it.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x, rtol) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x, rtol) / b


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    n = len(xs)
    if n != len(ys):
        raise ValueError(f"series lengths differ: {n} vs {len(ys)}")
    if n < 3:
        raise ValueError(f"need at least 3 pairs, got {n}")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    ss_x = math.fsum(d * d for d in dx)
    ss_y = math.fsum(d * d for d in dy)
    if ss_x == 0.0:
        raise ValueError("zero variance in the first series")
    if ss_y == 0.0:
        raise ValueError("zero variance in the second series")
    return math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(ss_x * ss_y)


def t_statistic(r: float, n: int) -> float:
    """t = r * sqrt((n - 2) / (1 - r^2)) for a correlation of n pairs."""
    if n < 3:
        raise ValueError(f"need at least 3 pairs, got n={n}")
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation must be in [-1, 1], got {r}")
    if abs(r) == 1.0:
        raise ValueError("degenerate correlation: |r| = 1 has no finite t statistic")
    return r * math.sqrt((n - 2) / (1.0 - r * r))


def p_value(t: float, dof: int, rtol: float = 1e-12) -> float:
    """Two-tailed p-value of a t statistic: I_x(dof/2, 1/2) with x = dof/(dof + t^2)."""
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x, rtol=rtol)


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson r with its significance test (two-tailed)."""

    r: float
    n: int
    t: float
    dof: int
    p: float
    tails: str = "two"

    def as_dict(self) -> dict:
        return {"r": self.r, "n": self.n, "t": self.t, "dof": self.dof, "p": self.p, "tails": self.tails}


def correlate(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Pearson r between two series plus its t statistic and two-tailed p-value."""
    r = pearson(xs, ys)
    n = len(xs)
    t = t_statistic(r, n)
    return CorrelationResult(r=r, n=n, t=t, dof=n - 2, p=p_value(t, n - 2))


def _as_ratio(value) -> float:
    ratio = getattr(value, "ratio", value)
    return float(ratio)


@dataclass(frozen=True)
class ModelSelection:
    """Best-CAI vs best-accuracy choice for one dataset."""

    best_cai_model: str
    best_cai: float
    best_cai_accuracy: float | None
    best_accuracy_model: str | None
    best_accuracy: float | None
    match: bool | None
    accuracy_difference: float | None


def select_model(
    cai_by_model: Mapping[str, float],
    acc_by_model: Mapping[str, float] | None = None,
) -> ModelSelection:
    """Pick the model with the highest CAI ratio; when accuracies are known,
    compare against the highest-accuracy model.

    An infinite ratio beats every finite one; exact ties go to the model whose
    name sorts first.  ``accuracy_difference`` is the chosen model's accuracy
    minus the best accuracy (zero on a match, negative otherwise).
    """
    if not cai_by_model:
        raise ValueError("no candidate models")
    models = sorted(cai_by_model)
    best_cai_model = max(models, key=lambda m: _as_ratio(cai_by_model[m]))
    best_cai = _as_ratio(cai_by_model[best_cai_model])
    if acc_by_model is None:
        return ModelSelection(best_cai_model, best_cai, None, None, None, None, None)
    missing = [m for m in models if m not in acc_by_model]
    if missing:
        raise ValueError(f"accuracy missing for model(s) {missing}")
    best_acc_model = max(models, key=lambda m: acc_by_model[m])
    chosen_accuracy = acc_by_model[best_cai_model]
    best_accuracy = acc_by_model[best_acc_model]
    return ModelSelection(
        best_cai_model=best_cai_model,
        best_cai=best_cai,
        best_cai_accuracy=chosen_accuracy,
        best_accuracy_model=best_acc_model,
        best_accuracy=best_accuracy,
        match=best_cai_model == best_acc_model,
        accuracy_difference=chosen_accuracy - best_accuracy,
    )


@dataclass(frozen=True)
class SelectionReport:
    """Per-dataset model choices plus the aggregate match rate."""

    rows: tuple[tuple[str, ModelSelection], ...]
    match_rate: float | None

    def as_rows(self) -> list[dict]:
        out = []
        for dataset, sel in self.rows:
            out.append(
                {
                    "dataset": dataset,
                    "best_cai_model": sel.best_cai_model,
                    "best_cai_accuracy": sel.best_cai_accuracy,
                    "best_accuracy_model": sel.best_accuracy_model,
                    "best_accuracy": sel.best_accuracy,
                    "match": sel.match,
                    "accuracy_difference": sel.accuracy_difference,
                }
            )
        return out


def build_selection_report(
    cai_table: Mapping[str, Mapping[str, float]],
    acc_table: Mapping[str, Mapping[str, float]] | None = None,
) -> SelectionReport:
    """Apply select_model per dataset (rows keep the table's order)."""
    rows: list[tuple[str, ModelSelection]] = []
    for dataset, cai_by_model in cai_table.items():
        acc_by_model = acc_table[dataset] if acc_table is not None else None
        rows.append((dataset, select_model(cai_by_model, acc_by_model)))
    matches = [sel.match for _, sel in rows if sel.match is not None]
    match_rate = sum(matches) / len(matches) if matches else None
    return SelectionReport(rows=tuple(rows), match_rate=match_rate)


def write_selection_csv(report: SelectionReport, path: str | Path) -> None:
    """Table-shaped CSV: one row per dataset, accuracies to two decimals."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "dataset",
                "best_cai_model",
                "best_cai_model_accuracy",
                "best_accuracy_model",
                "best_accuracy",
                "match",
                "accuracy_difference",
            ]
        )
        for dataset, sel in report.rows:
            writer.writerow(
                [
                    dataset,
                    sel.best_cai_model,
                    "" if sel.best_cai_accuracy is None else f"{sel.best_cai_accuracy:.2f}",
                    "" if sel.best_accuracy_model is None else sel.best_accuracy_model,
                    "" if sel.best_accuracy is None else f"{sel.best_accuracy:.2f}",
                    "" if sel.match is None else str(sel.match).lower(),
                    "" if sel.accuracy_difference is None else f"{sel.accuracy_difference:.2f}",
                ]
            )
