"""User-study statistics: confusion tables, odds ratios, logistic regression.

Odds ratios compare the odds of a correct contact call between two study
conditions, with Woolf (log-normal) confidence intervals. The logistic route
is a fixed-effects maximum-likelihood fit via iteratively reweighted least
squares; on two-condition data its exponentiated coefficient coincides with
the 2x2 odds ratio, which the tests exploit as a cross-check.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import chi2, norm

from .bench import ConfusionCounts
from .errors import InvalidInputError, InvalidParameterError
from .features import ContactLabel

Z_95 = float(norm.ppf(0.975))


class Condition(str, enum.Enum):
    CONTROL = "control"
    DECLARATIVE = "declarative"
    SENSING = "sensing"


@dataclass(frozen=True)
class StudyRecord:
    user_id: str
    condition: Condition
    actual: ContactLabel
    estimated: ContactLabel
    trial_id: str

    def __post_init__(self) -> None:
        if not self.user_id:
            raise InvalidInputError("user_id must be non-empty")
        if not isinstance(self.condition, Condition):
            object.__setattr__(self, "condition", Condition(self.condition))

    @property
    def correct(self) -> bool:
        return self.actual is self.estimated


def condition_confusion(
    records: list[StudyRecord], condition: Condition
) -> tuple[ConfusionCounts, float]:
    """Confusion counts and combined error rate for one study condition."""
    rows = [r for r in records if r.condition is condition]
    if not rows:
        raise InvalidInputError(f"no records for condition {condition.value!r}")
    counts = ConfusionCounts.tally((r.actual, r.estimated) for r in rows)
    return counts, counts.errors / counts.total


class OddsRatioMethod(str, enum.Enum):
    WOOLF_2X2 = "woolf_2x2"
    LOGISTIC_WALD = "logistic_wald"


@dataclass(frozen=True)
class OddsRatioResult:
    odds_ratio: float
    ci_low: float
    ci_high: float
    p_value: float
    method: OddsRatioMethod
    continuity_corrected: bool = False

    def __post_init__(self) -> None:
        if not (self.ci_low <= self.odds_ratio <= self.ci_high):
            raise InvalidParameterError(
                "confidence interval must bracket the point estimate"
            )


def odds_ratio_2x2(
    counts_a: tuple[int, int],
    counts_b: tuple[int, int],
    *,
    haldane_correction: bool = False,
) -> OddsRatioResult:
    """Odds ratio of group A (correct, incorrect) versus group B.

    Uses the Woolf log-normal interval exp(ln OR +/- z * sqrt(sum 1/cell))
    and a two-sided normal p-value on ln OR. Zero cells require the
    Haldane-Anscombe +0.5 correction to be enabled explicitly; the result is
    flagged when it is applied.
    """
    cells = [counts_a[0], counts_a[1], counts_b[0], counts_b[1]]
    if any(c < 0 for c in cells):
        raise InvalidInputError("cell counts must be non-negative")
    corrected = False
    if any(c == 0 for c in cells):
        if not haldane_correction:
            raise InvalidInputError(
                "zero cell in 2x2 table; enable haldane_correction to proceed"
            )
        cells = [c + 0.5 for c in cells]
        corrected = True
    a_c, a_i, b_c, b_i = (float(c) for c in cells)
    odds_ratio = (a_c / a_i) / (b_c / b_i)
    se = math.sqrt(1.0 / a_c + 1.0 / a_i + 1.0 / b_c + 1.0 / b_i)
    log_or = math.log(odds_ratio)
    z = log_or / se
    return OddsRatioResult(
        odds_ratio=odds_ratio,
        ci_low=math.exp(log_or - Z_95 * se),
        ci_high=math.exp(log_or + Z_95 * se),
        p_value=float(2.0 * norm.sf(abs(z))),
        method=OddsRatioMethod.WOOLF_2X2,
        continuity_corrected=corrected,
    )


def correct_incorrect(records: list[StudyRecord], condition: Condition) -> tuple[int, int]:
    counts, _ = condition_confusion(records, condition)
    return counts.tp + counts.tn, counts.errors


# ---------------------------------------------------------------------------
# Fixed-effects logistic regression (IRLS) with Wald tests


@dataclass(frozen=True)
class ConditionEffect:
    condition: Condition
    coefficient: float
    std_error: float
    odds_ratio: float
    ci_low: float
    ci_high: float
    wald_chi2: float
    p_value: float


@dataclass(frozen=True)
class LogisticWaldResult:
    reference_condition: Condition
    intercept: float
    effects: dict[Condition, ConditionEffect]
    overall_wald_chi2: float
    overall_df: int
    overall_p_value: float
    iterations: int
    converged: bool
    max_abs_gradient: float


def _safe_exp(x: float) -> float:
    # Diverged coefficients (separation) would overflow math.exp.
    return math.exp(x) if x < 700.0 else float("inf")


def _irls(X: np.ndarray, y: np.ndarray, tol: float = 1e-10, max_iter: int = 100):
    """Newton / IRLS for unregularized binary logistic regression."""
    n, p = X.shape
    beta = np.zeros(p)
    converged = False
    iterations = 0
    grad = np.zeros(p)
    for iterations in range(1, max_iter + 1):
        eta = X @ beta
        prob = 1.0 / (1.0 + np.exp(-eta))
        w = np.clip(prob * (1.0 - prob), 1e-12, None)
        grad = X.T @ (y - prob)
        hess = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise InvalidInputError(f"singular information matrix: {exc}") from exc
        beta = beta + step
        if float(np.max(np.abs(step))) < tol:
            converged = True
            break
    if not converged or float(np.max(np.abs(beta))) > 30.0:
        converged = False
        warnings.warn(
            "logistic fit did not converge cleanly (possible separation); "
            f"iterations={iterations}, max|grad|={float(np.max(np.abs(grad))):.3e}",
            RuntimeWarning,
            stacklevel=3,
        )
    eta = X @ beta
    prob = 1.0 / (1.0 + np.exp(-eta))
    w = np.clip(prob * (1.0 - prob), 1e-12, None)
    cov = np.linalg.inv((X * w[:, None]).T @ X)
    return beta, cov, iterations, converged, float(np.max(np.abs(X.T @ (y - prob))))


def logistic_wald(
    records: list[StudyRecord],
    reference_condition: Condition = Condition.CONTROL,
) -> LogisticWaldResult:
    """Regress correctness on condition indicators; Wald-test the effects.

    The overall statistic tests all non-reference condition coefficients
    jointly (chi-square with #conditions - 1 degrees of freedom).
    """
    if not records:
        raise InvalidInputError("no study records")
    present = sorted({r.condition for r in records}, key=lambda c: c.value)
    if reference_condition not in present:
        raise InvalidInputError(
            f"reference condition {reference_condition.value!r} absent from records"
        )
    if len(present) < 2:
        raise InvalidInputError("need at least two conditions for a condition effect")
    others = [c for c in present if c is not reference_condition]

    y = np.array([1.0 if r.correct else 0.0 for r in records])
    X = np.ones((len(records), 1 + len(others)))
    for j, cond in enumerate(others, start=1):
        X[:, j] = [1.0 if r.condition is cond else 0.0 for r in records]

    beta, cov, iterations, converged, max_grad = _irls(X, y)

    effects: dict[Condition, ConditionEffect] = {}
    for j, cond in enumerate(others, start=1):
        se = math.sqrt(cov[j, j])
        wald = (beta[j] / se) ** 2
        effects[cond] = ConditionEffect(
            condition=cond,
            coefficient=float(beta[j]),
            std_error=se,
            odds_ratio=_safe_exp(float(beta[j])),
            ci_low=_safe_exp(float(beta[j] - Z_95 * se)),
            ci_high=_safe_exp(float(beta[j] + Z_95 * se)),
            wald_chi2=float(wald),
            p_value=float(chi2.sf(wald, df=1)),
        )

    block = cov[1:, 1:]
    b = beta[1:]
    overall = float(b @ np.linalg.solve(block, b))
    df = len(others)
    return LogisticWaldResult(
        reference_condition=reference_condition,
        intercept=float(beta[0]),
        effects=effects,
        overall_wald_chi2=overall,
        overall_df=df,
        overall_p_value=float(chi2.sf(overall, df=df)),
        iterations=iterations,
        converged=converged,
        max_abs_gradient=max_grad,
    )


# ---------------------------------------------------------------------------
# Record persistence and reporting

RECORDS_HEADER = ["user_id", "condition", "actual", "estimated", "trial_id"]


def save_study_records(records: list[StudyRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORDS_HEADER)
        for r in records:
            writer.writerow(
                [r.user_id, r.condition.value, r.actual.text, r.estimated.text, r.trial_id]
            )


def load_study_records(path: str | Path) -> list[StudyRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RECORDS_HEADER:
            raise InvalidInputError(f"unexpected records header {header!r} in {path}")
        records = []
        for row in reader:
            if not row:
                continue
            user_id, condition, actual, estimated, trial_id = row
            records.append(
                StudyRecord(
                    user_id=user_id,
                    condition=Condition(condition),
                    actual=ContactLabel.from_text(actual),
                    estimated=ContactLabel.from_text(estimated),
                    trial_id=trial_id,
                )
            )
    return records


METHOD_NOTE = (
    "Odds-ratio confidence intervals and p-values use the Woolf normal "
    "approximation on pooled 2x2 tables and do not adjust for repeated "
    "measurements per user; a mixed-model analysis of the same records can "
    "give slightly different intervals and test statistics around the same "
    "point estimates."
)


def study_report(records: list[StudyRecord]) -> dict:
    """Per-condition confusion cells, error rates, and odds ratios vs control."""
    report: dict = {"conditions": {}, "odds_ratios": {}, "note": METHOD_NOTE}
    present = [c for c in Condition if any(r.condition is c for r in records)]
    for cond in present:
        counts, error_rate = condition_confusion(records, cond)
        report["conditions"][cond.value] = {
            "tp": counts.tp,
            "fp": counts.fp,
            "fn": counts.fn,
            "tn": counts.tn,
            "total": counts.total,
            "errors": counts.errors,
            "error_rate": error_rate,
            "error_rate_pct": f"{100.0 * error_rate:.1f}%",
        }
    if Condition.CONTROL in present:
        control = correct_incorrect(records, Condition.CONTROL)
        for cond in present:
            if cond is Condition.CONTROL:
                continue
            result = odds_ratio_2x2(correct_incorrect(records, cond), control)
            report["odds_ratios"][cond.value] = {
                "vs": Condition.CONTROL.value,
                "odds_ratio": result.odds_ratio,
                "ci_low": result.ci_low,
                "ci_high": result.ci_high,
                "p_value": result.p_value,
                "method": result.method.value,
            }
        if len(present) >= 2:
            fit = logistic_wald(records, reference_condition=Condition.CONTROL)
            report["logistic_wald"] = {
                "overall_chi2": fit.overall_wald_chi2,
                "df": fit.overall_df,
                "p_value": fit.overall_p_value,
                "converged": fit.converged,
                "effects": {
                    cond.value: {
                        "odds_ratio": e.odds_ratio,
                        "wald_chi2": e.wald_chi2,
                        "p_value": e.p_value,
                    }
                    for cond, e in fit.effects.items()
                },
            }
    return report


def render_report_markdown(report: dict) -> str:
    lines = ["# User study classification results", ""]
    lines.append("| Condition | TP | FN | FP | TN | Errors | Error rate |")
    lines.append("|---|---|---|---|---|---|---|")
    for name, c in report["conditions"].items():
        lines.append(
            f"| {name} | {c['tp']} | {c['fn']} | {c['fp']} | {c['tn']} "
            f"| {c['errors']}/{c['total']} | {c['error_rate_pct']} |"
        )
    if report["odds_ratios"]:
        lines += ["", "| Comparison | Odds ratio | 95% CI | p |", "|---|---|---|---|"]
        for name, o in report["odds_ratios"].items():
            lines.append(
                f"| {name} vs {o['vs']} | {o['odds_ratio']:.2f} "
                f"| [{o['ci_low']:.2f}, {o['ci_high']:.2f}] | {o['p_value']:.3f} |"
            )
    if "logistic_wald" in report:
        lw = report["logistic_wald"]
        lines += [
            "",
            f"Condition effect (fixed-effects logistic): Wald chi2 = "
            f"{lw['overall_chi2']:.2f} (df {lw['df']}), p = {lw['p_value']:.4f}.",
        ]
    lines += ["", f"_{report['note']}_", ""]
    return "\n".join(lines)
