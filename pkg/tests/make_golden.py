"""Regenerate the golden files: python tests/make_golden.py"""

import json
import tempfile
from pathlib import Path

from click.testing import CliRunner

from convexsos.cli import main


def regenerate() -> None:
    from test_cli import _canonical_analyze, _canonical_solve

    golden_dir = Path(__file__).resolve().parent / "golden"
    golden_dir.mkdir(exist_ok=True)
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tmp:
        for name in ("ex32", "ex-noncompact", "ex33"):
            args = ["solve", name, "--json", "--cert-out", f"{tmp}/c.json"]
            if name == "ex33":
                args += ["--k-max", "3"]
            result = runner.invoke(main, args)
            assert result.exit_code == 0, result.output
            canonical = _canonical_solve(json.loads(result.output))
            path = golden_dir / f"solve-{name}.json"
            path.write_text(json.dumps(canonical, indent=2, sort_keys=True) + "\n")
            print("wrote", path)
    for name in ("ex-affine-invariant", "ex32"):
        result = runner.invoke(main, ["analyze", name, "--json"])
        assert result.exit_code == 0, result.output
        canonical = _canonical_analyze(json.loads(result.output))
        path = golden_dir / f"analyze-{name}.json"
        path.write_text(json.dumps(canonical, indent=2, sort_keys=True) + "\n")
        print("wrote", path)


if __name__ == "__main__":
    import sys

    sys.path.insert(0, str(Path(__file__).resolve().parent))
    regenerate()
