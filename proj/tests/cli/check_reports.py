"""Runs the CLI on the shipped configs and validates the JSON reports."""

import argparse
import copy
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run_sweep(cli, config, out_dir):
    cmd = [cli, "sweep", "--config", str(config), "--out", str(out_dir), "--reps", "200", "--no-timing",
           "--threads", "1"]
    subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--schema", required=True)
    parser.add_argument("--configs", nargs="+", required=True)
    args = parser.parse_args()

    schema = json.loads(pathlib.Path(args.schema).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    sample = None
    with tempfile.TemporaryDirectory() as tmp:
        for cfg in args.configs:
            out = pathlib.Path(tmp) / pathlib.Path(cfg).stem
            run_sweep(args.cli, cfg, out)
            reports = sorted(out.glob("*.json"))
            if not reports:
                print(f"FAIL {cfg}: no JSON report written")
                failures += 1
                continue
            for path in reports:
                doc = json.loads(path.read_text())
                errors = list(validator.iter_errors(doc))
                status = "PASS" if not errors else "FAIL"
                print(f"{status} {cfg}: {path.name}" + (f" ({errors[0].message})" if errors else ""))
                failures += bool(errors)
                if sample is None and doc["records"]:
                    sample = doc

    if sample is None:
        print("FAIL no report with records to mutate")
        return 1

    # Documents the schema must reject.
    broken = []
    extra = copy.deepcopy(sample)
    extra["unexpected"] = 1
    broken.append(("extra top-level key", extra))
    bad_perm = copy.deepcopy(sample)
    bad_perm["records"][0]["permutation"] = "0,1"
    broken.append(("zero-based permutation", bad_perm))
    bad_eval = copy.deepcopy(sample)
    bad_eval["records"][0]["evaluator"] = "guess"
    broken.append(("unknown evaluator", bad_eval))
    missing = copy.deepcopy(sample)
    del missing["rows"]
    broken.append(("missing rows", missing))
    negative = copy.deepcopy(sample)
    negative["records"][0]["std_error"] = -1.0
    broken.append(("negative standard error", negative))
    for label, doc in broken:
        rejected = not validator.is_valid(doc)
        print(f"{'PASS' if rejected else 'FAIL'} schema rejects {label}")
        failures += not rejected
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
