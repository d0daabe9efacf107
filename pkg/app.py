#!/usr/bin/env python3
"""Entry point for local development.

For production use, install the package and run:
    sl-spectral <command> <problem-file>
"""

import sys

if __name__ == "__main__":
    sys.path.insert(0, "src")
    from sl_spectral.cli import main
    sys.exit(main())
