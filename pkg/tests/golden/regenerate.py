"""Rewrite the golden outputs from the current build: ``python3 tests/golden/regenerate.py``."""
import io
import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from cli_cases import CASES, GOLDEN  # noqa: E402
from gaussdag.cli import main  # noqa: E402


def run():
    os.chdir(GOLDEN)
    for name, argv, _, _ in CASES:
        out = io.StringIO()
        code = main(argv + ["--no-banner"], out=out)
        if code != 0:
            raise SystemExit(f"{name}: exit {code}")
        (GOLDEN / f"{name}.out").write_text(out.getvalue())
        print(f"wrote {name}.out")


if __name__ == "__main__":
    run()
