"""Validates scenario configs against the published JSON schema."""
import json
import sys

import jsonschema


def main(schema_path, configs):
    schema = json.load(open(schema_path))
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failed = 0
    for path in configs:
        errors = list(validator.iter_errors(json.load(open(path))))
        for e in errors:
            print(f"{path}: {e.message}")
        failed += bool(errors)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2:]))
