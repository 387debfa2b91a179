"""Run every CLI command on the bundled configs, writing into ./out/<command>."""

import sys
from pathlib import Path

from fracflow.cli import run

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
JOBS = [
    ("simulate", "default.json"),
    ("decay", "default.json"),
    ("profile", "default.json"),
    ("inequalities", "default.json"),
    ("probes", "small_time.json"),
    ("kernel", "default.json"),
]


def main(out_root="out"):
    codes = {}
    for command, cfg in JOBS:
        out = Path(out_root) / command
        print(f"== {command} ({cfg}) -> {out}")
        codes[command] = run([command, "--config", str(CONFIGS / cfg), "--out", str(out), "--seed", "0"])
    print({k: v for k, v in codes.items()})
    return max(codes.values())


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
