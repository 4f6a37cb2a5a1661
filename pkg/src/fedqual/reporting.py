"""CSV export of run results.

All numbers are written with nine significant digits. The per-round wall
time is deliberately not exported: output files must be byte-identical
across reruns of the same config, so timing goes to the log instead and
the seconds column stays empty.
"""
from __future__ import annotations

from pathlib import Path

from .metrics import METRIC_NAMES


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def export_csv(reports, path, *, num_clients: int) -> None:
    """Write one row per round: t, rho_t, six metrics, per-client weights, seconds.

    Weight cells are blank for clients not selected that round; the column
    count is always 3 + 6 + num_clients.
    """
    header = ["t", "rho_t", *METRIC_NAMES]
    header += [f"w_{i}" for i in range(num_clients)]
    header.append("seconds")
    lines = [",".join(header)]
    for report in reports:
        row = [str(report.round_index), _fmt(report.rho)]
        row += [_fmt(v) for v in report.metrics.values()]
        for client_id in range(num_clients):
            if client_id in report.weights:
                row.append(_fmt(report.weights[client_id]))
            else:
                row.append("")
        row.append("")
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_sweep_summary(rows, path) -> None:
    """Write final-round metrics per sweep value: the plot-data table."""
    lines = [",".join(["value", *METRIC_NAMES])]
    for value, metrics in rows:
        lines.append(",".join([f"{value:g}", *(_fmt(v) for v in metrics.values())]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
