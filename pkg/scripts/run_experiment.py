#!/usr/bin/env python3
"""
Run a netsec-lmf experiment from the command line.

Usage:
    python scripts/run_experiment.py equilibria --params configs/prop2_strong.toml --format json
    python scripts/run_experiment.py adoption-curve --out results/adoption.csv
"""

import sys
from pathlib import Path

# Add src to path
current_dir = Path(__file__).resolve().parent
src_path = current_dir.parent / 'src'
sys.path.append(str(src_path))

from netsec_lmf.cli import main

if __name__ == "__main__":
    sys.exit(main())
