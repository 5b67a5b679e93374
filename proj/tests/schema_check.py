"""Validates the shipped configs against docs/config.schema.json."""
import glob
import json
import os
import sys

import jsonschema

root = sys.argv[1]
schema = json.load(open(os.path.join(root, "docs", "config.schema.json")))
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)
bad = 0
for path in sorted(glob.glob(os.path.join(root, "configs", "*.json")) + glob.glob(os.path.join(root, "tests", "data", "*.json"))):
    errors = list(validator.iter_errors(json.load(open(path))))
    for e in errors:
        print(f"{path}: {e.message}")
    bad += bool(errors)
sys.exit(1 if bad else 0)
