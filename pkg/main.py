#!/usr/bin/env python3
"""
weakisingsim - Main Entry Point

Usage:
    python main.py ground --length 256
    python main.py ensemble --length 256 --lambda 0.5 --scheme born --trajectories 100
    python main.py analytic --curve c_eff_uniform --lambda-grid 0:1:11
"""

import sys

from weakisingsim.cli import main

if __name__ == "__main__":
    sys.exit(main())
