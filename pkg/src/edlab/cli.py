"""Command-line front end.

    edlab run SPEC.json [--out-dir D] [--seed N] [--jobs K]
    edlab validate SPEC.json
    edlab verify {born-e,born-f,route-equivalence} [--instances N] [--seed S]

Exit status: 0 on success, 2 when the experiment file is invalid, 3 when a
verification fails.  ``EDLAB_OUT_DIR`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiment import OUT_DIR_ENV, SpecError, dumps_json, load_spec, run
from .verification import CHECKS

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VERIFY_FAILED = 3


def _print_issues(err: SpecError) -> None:
    for issue in err.issues:
        print(json.dumps({"code": issue.code, "path": issue.path, "line": issue.line,
                          "message": issue.message}), file=sys.stderr)


def _load(path):
    try:
        return load_spec(path)
    except SpecError as err:
        _print_issues(err)
        return None
    except OSError as err:
        print(json.dumps({"code": "io", "path": str(path), "line": None, "message": str(err)}),
              file=sys.stderr)
        return None


def cmd_run(args) -> int:
    spec = _load(args.spec)
    if spec is None:
        return EXIT_INVALID
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    report = run(spec, args.out_dir, jobs=args.jobs)
    print(dumps_json(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_validate(args) -> int:
    spec = _load(args.spec)
    if spec is None:
        return EXIT_INVALID
    print(json.dumps({"valid": True, "spec_digest": spec.digest()}))
    return EXIT_OK


def cmd_verify(args) -> int:
    check = CHECKS[args.identity.replace("-", "_")]
    kwargs = {"seed": args.seed}
    if args.instances is not None:
        kwargs["instances"] = args.instances
    report = check(**kwargs)
    print(dumps_json(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment file")
    p.add_argument("spec")
    p.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV))
    p.add_argument("--seed", type=int, default=None, help="override the file's seed")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check an experiment file without running it")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("verify", help="batch-check an identity on random instances")
    p.add_argument("identity", choices=[k.replace("_", "-") for k in CHECKS])
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
