#!/usr/bin/env python3
"""
Script to run the edge-analysis experiments from a config file

Usage:
    python run_experiments.py simulate --config configs/baseline_disk.toml
    python run_experiments.py roc --config configs/baseline_disk.toml --threads 4
    python run_experiments.py repro fig14b
"""

from sma.cli import main

if __name__ == "__main__":
    main()
