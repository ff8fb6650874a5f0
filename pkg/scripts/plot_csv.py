#!/usr/bin/env python3
"""Quick-look plots for the emitted CSV datasets (requires matplotlib).

    python scripts/plot_csv.py out/perr_time.csv --x t --y p_err_povm p_err_standard
    python scripts/plot_csv.py out/array_scaling.csv --x n_sensors --y p_err --logy
"""
import argparse
import csv
import sys
from collections import defaultdict


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_file")
    parser.add_argument("--x", required=True)
    parser.add_argument("--y", nargs="+", required=True)
    parser.add_argument("--group", default=None, help="optional column to split curves by")
    parser.add_argument("--logy", action="store_true")
    parser.add_argument("--save", default=None, help="write to file instead of showing")
    args = parser.parse_args()

    try:
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is not installed; pip install matplotlib", file=sys.stderr)
        return 1

    groups = defaultdict(lambda: defaultdict(list))
    with open(args.csv_file, newline="") as fh:
        for row in csv.DictReader(fh):
            key = row[args.group] if args.group else ""
            groups[key][args.x].append(float(row[args.x]))
            for col in args.y:
                groups[key][col].append(float(row[col]))

    fig, ax = plt.subplots()
    for key, data in sorted(groups.items()):
        for col in args.y:
            label = col if not key else f"{col} [{args.group}={key}]"
            ax.plot(data[args.x], data[col], label=label)
    if args.logy:
        ax.set_yscale("log")
    ax.set_xlabel(args.x)
    ax.legend()
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=160)
        print(args.save)
    else:
        plt.show()
    return 0


if __name__ == "__main__":
    sys.exit(main())
