"""Plain CSV/text outputs for comparisons across model variants."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .metrics import Decomposition, ErrorSummary


def _fmt(v) -> str:
    return repr(float(v))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_rmse_csv(path, rmse: dict[str, np.ndarray]) -> None:
    """Rows are variants, columns joints, plus the mean across joints."""
    n = len(next(iter(rmse.values())))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["variant", *[f"joint_{j + 1}" for j in range(n)], "mean"])
        for variant, values in rmse.items():
            w.writerow([variant, *map(_fmt, values), _fmt(np.mean(values))])


def write_boxplot_csv(path, summaries: dict[str, ErrorSummary]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["variant", "joint", *ErrorSummary.FIELDS])
        for variant, summary in summaries.items():
            for j, row in enumerate(summary.rows()):
                w.writerow([variant, j + 1, *(str(int(row[f])) if f == "outliers" else _fmt(row[f]) for f in ErrorSummary.FIELDS)])


def write_decomposition_csv(path, t, dec: Decomposition) -> None:
    n = dec.total.shape[1]
    names = [*Decomposition.TERMS, "total"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["t", *[f"{name}_{j + 1}" for name in names for j in range(n)]])
        blocks = np.column_stack([np.asarray(t, float)] + [getattr(dec, name) for name in names])
        for row in blocks:
            w.writerow(map(_fmt, row))


def write_dissipative_csv(path, t, estimates: dict[str, np.ndarray], truth: np.ndarray | None = None) -> None:
    columns = dict(estimates)
    if truth is not None:
        columns = {"true": truth, **columns}
    n = next(iter(columns.values())).shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["t", *[f"{name}_{j + 1}" for name in columns for j in range(n)]])
        blocks = np.column_stack([np.asarray(t, float)] + list(columns.values()))
        for row in blocks:
            w.writerow(map(_fmt, row))


def ranking(rmse: dict[str, np.ndarray]) -> list[tuple[str, float]]:
    """Variants ordered by mean RMSE across joints, best first; ties keep input order."""
    return sorted(((v, float(np.mean(r))) for v, r in rmse.items()), key=lambda item: item[1])


def write_ranking(path, ranked: list[tuple[str, float]]) -> None:
    lines = [f"{k + 1} {variant} {value!r}" for k, (variant, value) in enumerate(ranked)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def gnuplot_script(csv_path, kind: str, n_joints: int) -> str:
    """A gnuplot script plotting one of the emitted CSV files."""
    csv_path = str(csv_path)
    head = ["set datafile separator ','", "set key autotitle columnhead", "set grid"]
    if kind == "rmse":
        body = [
            "set style data histogram",
            "set style histogram clustered",
            "set style fill solid 0.6",
            "plot " + ", ".join(f"'{csv_path}' using {j + 2}:xtic(1)" for j in range(n_joints)),
        ]
    elif kind in ("decomposition", "dissipative"):
        body = [
            "set xlabel 't [s]'",
            "set ylabel 'torque [N m]'",
            f"plot for [c=2:*] '{csv_path}' using 1:c with lines",
        ]
    elif kind == "boxplot":
        body = [
            "set style fill empty",
            "set xlabel 'variant/joint'",
            "set ylabel '|error|'",
            f"plot '{csv_path}' using 0:5:8:9:7 with candlesticks whiskerbars, "
            f"'' using 0:6:6:6:6 with candlesticks lt -1 notitle",
        ]
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    return "\n".join(head + body) + "\n"
