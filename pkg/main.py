#!/usr/bin/env python3
"""
Main execution file for censreg
Runs the command-line front end (fit, simulate, breakdown, curve)
"""

import sys

from cli import main

if __name__ == "__main__":
    sys.exit(main())
