"""Render diagnostic figures from a results CSV.

Consumes only the documented CSV schema of the experiment harness
(columns run_id,n,depth,kind,q,p,estimator,bitstring,value,std_error,
reference,bound,verdict,margin,samples,seed); never imports the
simulation package. SVG output is byte-stable for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

EXPECTED_COLUMNS = ("run_id", "n", "depth", "kind", "q", "p", "estimator",
                    "bitstring", "value", "std_error", "reference", "bound",
                    "verdict", "margin", "samples", "seed")

KINDS = ("z_vs_n", "moment_vs_weight", "second_moment_vs_bound",
         "pxh_histogram", "regime_map")

# fixed styles so identical inputs give identical bytes
STYLE = {
    "svg.hashsalt": "rcsplots",
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


class PlotDataError(ValueError):
    """The CSV is missing, empty, or lacks the needed rows/columns."""


def _float(text):
    if text is None or text == "":
        return math.nan
    return float(text)


def load_rows(path):
    """Read a results CSV into a list of typed row dicts."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise PlotDataError(f"{path} is empty")
            missing = [c for c in EXPECTED_COLUMNS if c not in header]
            if missing:
                raise PlotDataError(
                    f"{path} is missing required columns: "
                    f"{', '.join(missing)}")
            rows = []
            for raw in reader:
                if not raw:
                    continue
                row = dict(zip(header, raw))
                for col in ("value", "std_error", "reference", "bound",
                            "margin", "q", "p"):
                    row[col] = _float(row.get(col))
                for col in ("n", "depth", "samples"):
                    row[col] = int(row[col]) if row.get(col) else None
                rows.append(row)
    except OSError as exc:
        raise PlotDataError(f"cannot read {path}: {exc}")
    if not rows:
        raise PlotDataError(f"{path} contains a header but no data rows")
    return rows


def _select(rows, estimator):
    picked = [r for r in rows if r["estimator"] == estimator]
    if not picked:
        raise PlotDataError(f"no rows with estimator {estimator!r}")
    return picked


# ---------------------------------------
# Figure kinds
# ---------------------------------------

def plot_z_vs_n(rows, ax):
    """Scaled collision probability vs qubit count, with bound overlay."""
    picked = sorted(_select(rows, "z"), key=lambda r: r["n"])
    ns = [r["n"] for r in picked]
    vals = [r["value"] for r in picked]
    errs = [0.0 if math.isnan(r["std_error"]) else r["std_error"]
            for r in picked]
    ax.errorbar(ns, vals, yerr=errs, fmt="o", capsize=3, label="estimate")
    bounds = [(r["n"], r["bound"]) for r in picked
              if not math.isnan(r["bound"])]
    if bounds:
        ax.plot(*zip(*sorted(bounds)), "k--", label="lower bound")
    ax.set_xlabel("qubits n")
    ax.set_ylabel("scaled collision probability Z")
    ax.legend()


def plot_moment_vs_weight(rows, ax):
    """Mean bitstring probability vs Hamming weight, with references."""
    picked = _select(rows, "p_x")
    by_weight = {}
    for r in picked:
        w = r["bitstring"].count("1")
        by_weight.setdefault(w, []).append(r)
    weights = sorted(by_weight)
    means = [sum(r["value"] for r in by_weight[w]) / len(by_weight[w])
             for w in weights]
    errs = [max((0.0 if math.isnan(r["std_error"]) else r["std_error"])
                for r in by_weight[w]) for w in weights]
    ax.errorbar(weights, means, yerr=errs, fmt="o", capsize=3,
                label="estimate")
    refs = [(w, by_weight[w][0]["reference"]) for w in weights
            if not math.isnan(by_weight[w][0]["reference"])]
    if refs:
        ax.plot(*zip(*refs), "k--", label="closed form")
    ax.set_yscale("log")
    ax.set_xlabel("Hamming weight")
    ax.set_ylabel("mean probability")
    ax.legend()


def plot_second_moment_vs_bound(rows, ax):
    """Exact worst-case second moment vs its bound, by depth."""
    picked = _select(rows, "second_moment_exact")
    groups = {}
    for r in picked:
        groups.setdefault((r["kind"], r["n"], r["q"], r["p"]), []).append(r)
    for key in sorted(groups):
        series = sorted(groups[key], key=lambda r: r["depth"])
        depths = [r["depth"] for r in series]
        ax.plot(depths, [r["value"] for r in series], "o-",
                label=f"exact {key[0]} n={key[1]} q={key[2]:g} p={key[3]:g}")
        ax.plot(depths, [r["bound"] for r in series], "--",
                label=f"bound {key[0]} n={key[1]} q={key[2]:g} p={key[3]:g}")
    ax.set_yscale("log")
    ax.set_xlabel("depth d")
    ax.set_ylabel("max second moment, w >= n/2")
    ax.legend(fontsize=6)


def plot_pxh_histogram(rows, ax):
    """Histogram of mean bitstring probabilities across all strings."""
    picked = _select(rows, "p_x")
    vals = [r["value"] for r in picked]
    n = picked[0]["n"]
    ax.hist(vals, bins=min(32, max(4, len(vals) // 2)), edgecolor="black")
    if n is not None:
        ax.axvline(2.0 ** -n, color="k", linestyle="--",
                   label="uniform level")
        ax.legend()
    ax.set_xlabel("estimated E[p_x]")
    ax.set_ylabel("bitstrings")


def plot_regime_map(rows, ax):
    """Pass/fail verdicts over the (q, p) noise plane."""
    picked = [r for r in rows if r["verdict"] in ("pass", "fail")
              and not math.isnan(r["q"]) and not math.isnan(r["p"])]
    if not picked:
        raise PlotDataError("no rows with verdicts and (q, p) coordinates")
    for verdict, marker, color in (("pass", "o", "tab:green"),
                                   ("fail", "x", "tab:red")):
        pts = sorted({(r["q"], r["p"]) for r in picked
                      if r["verdict"] == verdict})
        if pts:
            ax.scatter(*zip(*pts), marker=marker, c=color, label=verdict)
    ax.set_xlabel("amplitude damping q")
    ax.set_ylabel("depolarizing p")
    ax.legend()


RENDERERS = {
    "z_vs_n": plot_z_vs_n,
    "moment_vs_weight": plot_moment_vs_weight,
    "second_moment_vs_bound": plot_second_moment_vs_bound,
    "pxh_histogram": plot_pxh_histogram,
    "regime_map": plot_regime_map,
}


# ---------------------------------------
# Entry point
# ---------------------------------------

def render(in_paths, kind, out_path, fmt="svg"):
    """Render one figure kind from one or more CSVs to out_path."""
    if kind not in RENDERERS:
        raise PlotDataError(f"unknown figure kind {kind!r}; "
                            f"known: {', '.join(KINDS)}")
    if fmt not in ("svg", "png"):
        raise PlotDataError(f"unknown format {fmt!r}")
    rows = []
    for path in in_paths:
        rows.extend(load_rows(path))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            RENDERERS[kind](rows, ax)
            ax.set_title(kind.replace("_", " "))
            fig.tight_layout()
            # no timestamps: identical inputs must give identical bytes
            metadata = {"Date": None} if fmt == "svg" else None
            fig.savefig(out_path, format=fmt, metadata=metadata)
        finally:
            plt.close(fig)
    return out_path


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rcsplot",
        description="Render diagnostic figures from results CSV files")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV path(s)")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--format", default="svg", choices=("svg", "png"))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        render(args.inputs, args.kind, args.out, args.format)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
