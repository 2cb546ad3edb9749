#!/usr/bin/env python3
"""
cubesheaf - Main Entry Point
Builds instance bundles, runs verification suites and extracts codes.
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from cubesheaf.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
