"""File- and tree-level porting with target path generation.

The target filename mirrors the source with every ``cuda`` path segment
replaced by ``hip`` and the extensions mapped ``.cu -> .hip.cpp`` and
``.cuh -> .hip.hpp``. Translation itself is tokenize, rewrite launch
sites, apply rename rules, in that order.
"""

from dataclasses import dataclass, field
from pathlib import Path

from .launch import rewrite_launch_sites
from .rules import apply_rename_rules, builtin_rules
from .tokens import IDENTIFIER, TranslationError, tokenize

EXTENSION_MAP = {".cu": ".hip.cpp", ".cuh": ".hip.hpp"}


@dataclass
class FileReport:
    source: str
    target: str = None
    launches: int = 0
    renames: int = 0
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


@dataclass
class PortReport:
    files: list = field(default_factory=list)

    @property
    def total_launches(self) -> int:
        return sum(f.launches for f in self.files)

    @property
    def total_renames(self) -> int:
        return sum(f.renames for f in self.files)

    @property
    def errors(self) -> list:
        return [(f.source, e) for f in self.files for e in f.errors]

    @property
    def ported(self) -> int:
        return sum(1 for f in self.files if not f.errors)

    @property
    def ok(self) -> bool:
        return not self.errors

    def format(self) -> str:
        lines = ["cuda2hip report"]
        for f in self.files:
            target = f.target if f.target is not None else "-"
            lines.append(
                f"file: {f.source} -> {target} launches={f.launches} "
                f"renames={f.renames} errors={len(f.errors)}"
            )
            for warning in f.warnings:
                lines.append(f"  warning: {warning}")
            for error in f.errors:
                lines.append(f"  error: {error}")
        lines.append(
            f"total: files={len(self.files)} ported={self.ported} "
            f"launches={self.total_launches} renames={self.total_renames} "
            f"errors={len(self.errors)}"
        )
        return "\n".join(lines) + "\n"


def _map_name(name: str) -> str:
    for ext, mapped in EXTENSION_MAP.items():
        if name.endswith(ext):
            return name[: -len(ext)] + mapped
    return name


def map_target_path(path, out_dir=None, src_root=None) -> Path:
    """Compute the translated file's destination.

    Without ``out_dir`` the path must contain a ``cuda`` segment, which is
    replaced by ``hip``; with ``out_dir``, the path relative to
    ``src_root`` (or the bare filename) is mirrored under it. The segment
    swap and extension maps apply in both modes.
    """
    path = Path(path)
    if out_dir is not None:
        rel = path.relative_to(src_root) if src_root is not None else Path(path.name)
        parts = ["hip" if p == "cuda" else p for p in rel.parts]
        parts[-1] = _map_name(parts[-1])
        return Path(out_dir).joinpath(*parts)
    if "cuda" not in path.parts:
        raise TranslationError(
            f"{path} has no 'cuda' path segment; pass an output directory instead", path=str(path)
        )
    parts = ["hip" if p == "cuda" else p for p in path.parts]
    parts[-1] = _map_name(parts[-1])
    return Path(*parts)


def translate_source(text: str, rules=None, path=None):
    """tokenize -> rewrite launch sites -> apply renames.

    Returns ``(translated_text, launches, renames, warnings)``.
    """
    if rules is None:
        rules = builtin_rules()
    unit = tokenize(text, path=path)
    unit, sites = rewrite_launch_sites(unit, source_text=text)
    unit, renames = apply_rename_rules(unit, rules)
    warnings = []
    if any(t.kind == IDENTIFIER and t.text == "__launch_bounds__" for t in unit.tokens):
        warnings.append(
            "__launch_bounds__ passes through unchanged; bounds tuned for one "
            "architecture rarely suit the other"
        )
    return unit.text(), len(sites), renames, warnings


def port_file(path, rules=None, out_dir=None, src_root=None):
    """Translate one file; returns ``(target_path, translated_text)``.

    Pure computation: writing the target is the caller's job.
    """
    path = Path(path)
    target = map_target_path(path, out_dir=out_dir, src_root=src_root)
    text = path.read_text()
    translated, _, _, _ = translate_source(text, rules, path=str(path))
    return target, translated


def port_tree(src_root, rules=None, out_dir=None, dry_run=False) -> PortReport:
    """Port every .cu/.cuh file under ``src_root``; per-file errors are
    collected rather than aborting the walk."""
    src_root = Path(src_root)
    if rules is None:
        rules = builtin_rules()
    files = sorted(p for p in src_root.rglob("*") if p.is_file() and p.suffix in EXTENSION_MAP)
    report = PortReport()
    for path in files:
        entry = FileReport(source=str(path))
        report.files.append(entry)
        try:
            target = map_target_path(path, out_dir=out_dir, src_root=src_root if out_dir else None)
            text = path.read_text()
            translated, launches, renames, warnings = translate_source(text, rules, path=str(path))
        except (TranslationError, OSError) as exc:
            entry.errors.append(str(exc))
            continue
        entry.target = str(target)
        entry.launches = launches
        entry.renames = renames
        entry.warnings = warnings
        if not dry_run:
            try:
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(translated)
            except OSError as exc:
                entry.errors.append(str(exc))
    return report
