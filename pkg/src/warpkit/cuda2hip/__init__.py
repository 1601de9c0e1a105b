"""CUDA-dialect to HIP-dialect source translation.

Token-level (not AST) rewriting in the lineage of line-oriented porting
scripts, with three passes per file: lossless tokenization, kernel-launch
syntax rewriting, and whole-identifier/header/namespace renames. String
literals and comments are never modified.
"""

from .launch import LaunchSite, rewrite_launch_sites
from .port import FileReport, PortReport, map_target_path, port_file, port_tree, translate_source
from .rules import RewriteRule, apply_rename_rules, builtin_rules, parse_rules
from .tokens import (
    MalformedLaunch,
    Token,
    TranslationError,
    TranslationUnit,
    UnterminatedComment,
    UnterminatedString,
    tokenize,
)

__all__ = [
    "FileReport",
    "LaunchSite",
    "MalformedLaunch",
    "PortReport",
    "RewriteRule",
    "Token",
    "TranslationError",
    "TranslationUnit",
    "UnterminatedComment",
    "UnterminatedString",
    "apply_rename_rules",
    "builtin_rules",
    "map_target_path",
    "parse_rules",
    "port_file",
    "port_tree",
    "rewrite_launch_sites",
    "tokenize",
    "translate_source",
]
