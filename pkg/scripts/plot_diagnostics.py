#!/usr/bin/env python3
"""Plot one or more training diagnostics CSVs: loss, temperature, and the
per-component adjacent-pair cosine curves (cos_ff, cos_gg, cos_fg)."""

import argparse
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", nargs="+", help="diagnostics.csv paths")
    ap.add_argument("--out", default="diagnostics.png")
    args = ap.parse_args()

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is required for plotting: pip install matplotlib", file=sys.stderr)
        return 1

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    for path in args.csv:
        rows = []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                rows.append(dict(zip(header, map(float, line.strip().split(",")))))
        it = [r["iter"] for r in rows]
        axes[0].plot(it, [r["loss"] for r in rows], label=path)
        axes[1].plot(it, [r["tau"] for r in rows], label=path)
        for key, style in (("cos_ff", "-"), ("cos_gg", "--"), ("cos_fg", ":")):
            axes[2].plot(it, [r[key] for r in rows], style, label=f"{key} {path}")
    axes[0].set_title("loss")
    axes[1].set_title("temperature")
    axes[2].set_title("adjacent cosine / temperature")
    for ax in axes:
        ax.set_xlabel("iteration")
        ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
