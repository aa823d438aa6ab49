"""
TeraForge - super-resolution toolkit for THz images.
Script entry point; the installed console script is `teraforge`.
"""

import sys
from pathlib import Path

# Add src directory to Python path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

from cli.commands import main


if __name__ == "__main__":
    sys.exit(main())
