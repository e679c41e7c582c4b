"""Run the acceptance suite and print one PASS/FAIL line per criterion.

Usage: python3 scripts/run_acceptance.py [-k EXPR]
"""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main(argv):
    cmd = [sys.executable, "-m", "pytest", "-q", "-rN", str(ROOT / "tests" / "test_acceptance.py"), *argv]
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    lines = proc.stdout.splitlines()
    start = next((i for i, l in enumerate(lines) if "acceptance criteria" in l), None)
    if start is None:
        print(proc.stdout[-2000:], proc.stderr[-2000:], sep="\n")
        return proc.returncode or 1
    for line in lines[start + 1:]:
        if line.startswith("="):
            break
        print(line)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
