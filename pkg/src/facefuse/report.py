"""Report emission: delimited tables, a plain-text summary, and matplotlib
figures rendered to files alongside them.

``render_tables`` produces the canonical text serialization of a report;
two identically-seeded runs yield byte-identical tables.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import Report

SYSTEM_ORDER = ("mlp", "rbf", "fused")


def _fmt(x: float) -> str:
    return repr(float(x))


def _confusion_text(matrix) -> str:
    lines = [str(matrix.n_classes)]
    lines += [" ".join(str(v) for v in row) for row in matrix.counts]
    return "\n".join(lines) + "\n"


def render_tables(report: Report) -> dict:
    """All delimited/text outputs as {filename: content}."""
    systems = [s for s in SYSTEM_ORDER if s in report.systems]

    rates = ["system,recognition_rate,reject_rate,correct,incorrect,rejected"]
    for name in systems:
        r = report.systems[name]
        rates.append(
            f"{name},{_fmt(r.recognition_rate)},{_fmt(r.reject_rate)},{r.correct},{r.incorrect},{r.rejected}"
        )

    per_class = ["class," + ",".join(systems)]
    for i, cls in enumerate(report.class_names):
        row = [cls] + [_fmt(report.systems[name].per_class_rates[i]) for name in systems]
        per_class.append(",".join(row))

    cumulative = ["pattern," + ",".join(systems)]
    n_points = len(report.systems[systems[0]].cumulative_rates)
    for t in range(n_points):
        row = [str(t + 1)] + [_fmt(report.systems[name].cumulative_rates[t]) for name in systems]
        cumulative.append(",".join(row))

    summary = [
        "facefuse experiment report",
        f"seed: {report.seed}",
        f"classes: {len(report.class_names)} ({', '.join(report.class_names)})",
        f"train samples: {report.n_train}   test samples: {report.n_test}",
        "",
    ]
    for name in systems:
        r = report.systems[name]
        summary.append(
            f"{name:>6}: recognition {r.recognition_rate:.2f}%  reject {r.reject_rate:.2f}%  "
            f"(correct {r.correct}, incorrect {r.incorrect}, rejected {r.rejected})"
        )
    summary.append("")
    summary.append("config: " + repr(report.config))

    tables = {
        "summary.txt": "\n".join(summary) + "\n",
        "rates.csv": "\n".join(rates) + "\n",
        "per_class_rates.csv": "\n".join(per_class) + "\n",
        "cumulative_rates.csv": "\n".join(cumulative) + "\n",
    }
    for name in systems:
        tables[f"confusion_test_{name}.txt"] = _confusion_text(report.systems[name].confusion)
    for name, matrix in report.estimation_confusions.items():
        tables[f"confusion_train_{name}.txt"] = _confusion_text(matrix)
    return tables


def render_belief_trace(report: Report) -> str:
    n = len(report.class_names)
    header = "pattern,true," + ",".join(f"bel_{i + 1}" for i in range(n)) + ",decision"
    rows = [header]
    for idx, true, bel, decision in report.belief_trace:
        tag = str(decision.label) if decision.accepted else "reject"
        rows.append(f"{idx},{true}," + ",".join(_fmt(v) for v in bel) + f",{tag}")
    return "\n".join(rows) + "\n"


def report_bytes(report: Report, belief_trace: bool = True) -> bytes:
    """Canonical byte serialization (tables concatenated in name order)."""
    tables = render_tables(report)
    if belief_trace:
        tables["beliefs.csv"] = render_belief_trace(report)
    chunks = []
    for name in sorted(tables):
        chunks.append(f"=== {name} ===\n".encode())
        chunks.append(tables[name].encode())
    return b"".join(chunks)


def render_figures(report: Report, out_dir) -> list:
    """Write the comparison figures (PNG) and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    systems = [s for s in SYSTEM_ORDER if s in report.systems]
    styles = {"mlp": "--", "rbf": ":", "fused": "-"}
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in systems:
        curve = report.systems[name].cumulative_rates
        ax.plot(range(1, len(curve) + 1), curve, styles.get(name, "-"), label=name)
    ax.set_xlabel("test patterns seen")
    ax.set_ylabel("cumulative recognition rate (%)")
    ax.set_ylim(0, 105)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "recognition_rates.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = len(report.class_names)
    width = 0.8 / len(systems)
    for s_i, name in enumerate(systems):
        xs = [i + s_i * width for i in range(n)]
        ax.bar(xs, report.systems[name].per_class_rates, width=width, label=name)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(n)])
    ax.set_xticklabels(report.class_names, rotation=45, ha="right")
    ax.set_ylabel("per-class recognition rate (%)")
    ax.set_ylim(0, 105)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "per_class_rates.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def write_report(report: Report, out_dir, figures: bool = True, belief_trace: bool = False) -> list:
    """Write tables (and optionally figures / the belief trace) into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = render_tables(report)
    if belief_trace:
        tables["beliefs.csv"] = render_belief_trace(report)
    written = []
    for name, content in sorted(tables.items()):
        path = out_dir / name
        path.write_text(content, encoding="utf-8")
        written.append(path)
    if figures:
        written.extend(render_figures(report, out_dir))
    return written
