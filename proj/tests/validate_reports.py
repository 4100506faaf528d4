"""Runs each zl subcommand once and validates report.json against the schema."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

RUNS = {
    "marty-sweep": ["marty-sweep", "--catalog", "exp_n_z", "--schedule", "1,4,16", "--svg"],
    "mu-scan": ["mu-scan", "--catalog", "n_z1z2"],
    "classify": ["classify", "--catalog", "exp_n_z"],
    "rescale": ["rescale", "--catalog", "z1_pow_n"],
    "rescale-inconclusive": ["rescale", "--catalog", "cos_n_z1z2"],
    "verify-catalog": ["verify-catalog"],
}


def main() -> int:
    binary, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        points = Path(tmp) / "points.csv"
        points.write_text("re_z1,im_z1,re_z2,im_z2\n" + "".join(
            f"{0.05 * k},{0.02 * k},0,0\n0,0,{0.04 * k},{-0.03 * k}\n" for k in range(1, 12)))
        runs = dict(RUNS)
        runs["classify-locus"] = ["classify-locus", "--points", str(points)]
        for name, args in runs.items():
            out = Path(tmp) / name
            code = subprocess.run([binary, *args, "--out", str(out)], check=False).returncode
            if code != 0:
                print(f"{name}: exit code {code}")
                failed += 1
                continue
            report = json.loads((out / "report.json").read_text())
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for err in errors[:5]:
                print(f"{name}: {'/'.join(map(str, err.path))}: {err.message}")
            failed += bool(errors)
            print(f"{name}: {'invalid' if errors else 'valid'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
