"""cuda2hip command line: port a file or a source tree."""

import argparse
import sys
from pathlib import Path

from .port import FileReport, PortReport, map_target_path, port_tree, translate_source
from .rules import builtin_rules, parse_rules
from .tokens import TranslationError


def _load_rules(rules_path):
    rules = builtin_rules()
    if rules_path:
        # User rules get priority 5 so they win over every built-in.
        text = Path(rules_path).read_text()
        rules = parse_rules(text, default_priority=5, path=str(rules_path)) + rules
    return rules


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cuda2hip",
        description="Translate CUDA-dialect C++ sources to HIP-dialect C++.",
    )
    parser.add_argument("path", help="a .cu/.cuh file or a directory tree to port")
    parser.add_argument("--out", help="output directory (otherwise the cuda/ path segment maps to hip/)")
    parser.add_argument("--rules", help="additional rule table applied before the built-ins")
    parser.add_argument("--dry-run", action="store_true", help="translate and report without writing files")
    parser.add_argument("--report", help="write the report to this file instead of stdout")
    args = parser.parse_args(argv)

    try:
        rules = _load_rules(args.rules)
    except (TranslationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    path = Path(args.path)
    if path.is_dir():
        report = port_tree(path, rules, out_dir=args.out, dry_run=args.dry_run)
    else:
        report = PortReport()
        entry = FileReport(source=str(path))
        report.files.append(entry)
        try:
            target = map_target_path(path, out_dir=args.out)
            text = path.read_text()
            translated, launches, renames, warnings = translate_source(text, rules, path=str(path))
            entry.target = str(target)
            entry.launches = launches
            entry.renames = renames
            entry.warnings = warnings
            if not args.dry_run:
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(translated)
        except (TranslationError, OSError) as exc:
            entry.errors.append(str(exc))

    text = report.format()
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if report.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
