"""Regenerate ``data/`` and fit every config in ``configs/`` into ``runs/``.

Usage: ``python scripts/reproduce_runs.py``
"""

import sys
from pathlib import Path

from graphrom.cli import main

ROOT = Path(__file__).resolve().parents[1]

DATA = [
    ["--recipe", "microstructure-like", "--seed", "1", "--n-steps", "300", "--out", "data/microstructure.csv"],
    ["--recipe", "planted-sparse-linear", "--seed", "3", "--noise", "1e-3", "--out", "data/planted.csv"],
]


def run() -> int:
    for args in DATA:
        args = args[:-1] + [str(ROOT / args[-1])]
        if (code := main(["synth", *args])) != 0:
            return code
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        print(f"fit {cfg.name}")
        if (code := main(["fit", str(cfg)])) != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
