"""
sk-descent - main entry point
Run `python main.py --help` for the available subcommands.
"""

import sys
from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
