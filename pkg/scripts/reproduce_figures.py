#!/usr/bin/env python3
"""
Regenerate every figure and proposition table into results/.
Each job is one CLI invocation driven by a checked-in config.
"""

import sys
from datetime import datetime
from pathlib import Path

# Add src to path
current_dir = Path(__file__).resolve().parent
src_path = current_dir.parent / 'src'
sys.path.append(str(src_path))

from netsec_lmf import config
from netsec_lmf.cli import main as run_cli

CONFIGS = current_dir.parent / 'configs'

JOBS = [
    ("fig1_poa_strong.csv", ["poa-curve", "--params", "fig1_poa_strong.toml"]),
    ("fig1_poa_weak.csv", ["poa-curve", "--params", "fig1_poa_weak.toml"]),
    ("fig2_hstar.csv", ["lmf-solve", "--sweep-lambda-q", "--params", "fig2_hstar.toml"]),
    ("fig3_adoption.csv", ["adoption-curve", "--params", "fig3_adoption.toml"]),
    ("prop2_equilibria.json", ["equilibria", "--format", "json", "--params", "prop2_strong.toml"]),
    ("case2_equilibria.json", ["equilibria", "--format", "json", "--params", "tipping_weak.toml"]),
    ("tipping.json", ["tipping", "--format", "json", "--params", "tipping_weak.toml"]),
]


def _with_paths(args, out_path):
    args = list(args)
    i = args.index("--params")
    args[i + 1] = str(CONFIGS / args[i + 1])
    return args + ["--out", str(out_path)]


def main():
    """Run all jobs and print a summary"""
    print("=" * 70)
    print("REPRODUCE FIGURE TABLES")
    print("=" * 70)
    print(f"Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print(f"Output directory: {config.RESULTS_DIR}")
    print()

    ok_count = 0
    failed = []
    for idx, (filename, args) in enumerate(JOBS, 1):
        out_path = config.RESULTS_DIR / filename
        print(f"[{idx}/{len(JOBS)}] {' '.join(args[:1])} -> {filename}")
        code = run_cli(_with_paths(args, out_path))
        if code == 0:
            print(f"  [OK] {out_path}")
            ok_count += 1
        else:
            print(f"  [FAIL] exit code {code}")
            failed.append(filename)

    print()
    print("=" * 70)
    print(f"Completed: {ok_count}/{len(JOBS)} tables written")
    if failed:
        print(f"Failed: {', '.join(failed)}")
    print("=" * 70)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
