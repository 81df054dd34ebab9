#!/usr/bin/env python3
"""
Check what a simulation wrote: SMA1 sinogram headers and value statistics
"""

import sys
from pathlib import Path

from sma.cli import print_summary
from sma.errors import SmaError


def main(argv=None):
    """Summarize every file named on the command line (default: out/simulate/*.sma1)"""
    paths = [Path(p) for p in (sys.argv[1:] if argv is None else argv)]
    if not paths:
        paths = sorted(Path("out/simulate").glob("*.sma1"))
    if not paths:
        print("❌ No sinogram files found")
        return 1

    failures = 0
    for path in paths:
        try:
            print_summary(path)
        except (SmaError, OSError) as exc:
            print(f"❌ Cannot read {path}: {exc}")
            failures += 1
        print()
    print(f"✅ Checked {len(paths) - failures} of {len(paths)} files")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
