"""Path specification grammar.

A spec selects versioned files from the lake:

    /data/train.json          latest version of a file
    /data/train.json:2        exact file version
    /data/train.json@FS       the version referenced by fileset FS (latest)
    /data/train.json@FS:1     the version referenced by fileset FS version 1
    /data/@FS:1               every file under /data/ inside FS version 1
    /@FS                      every file of FS, latest version

`@` and `:` are reserved and may not appear inside path segments or
fileset names.  A prefix (path ending in `/`) is only meaningful together
with a fileset scope.
"""

import re
from dataclasses import dataclass
from typing import Optional

from .errors import ValidationError

_SEGMENT_FORBIDDEN = re.compile(r"[@:]")
_FS_NAME = re.compile(r"^[^@:/\s]+$")


def validate_path(path: str) -> str:
    """Check an absolute file path: non-empty segments, no reserved chars."""
    if not path.startswith("/"):
        raise ValidationError(f"path must be absolute: {path!r}")
    if path.endswith("/"):
        raise ValidationError(f"file path may not end with '/': {path!r}")
    for segment in path[1:].split("/"):
        if not segment:
            raise ValidationError(f"empty path segment in {path!r}")
        if _SEGMENT_FORBIDDEN.search(segment):
            raise ValidationError(f"'@' and ':' are reserved: {path!r}")
    return path


def validate_prefix(prefix: str) -> str:
    """A prefix is '/' or an absolute path ending in '/'."""
    if not prefix.startswith("/") or not prefix.endswith("/"):
        raise ValidationError(f"prefix must start and end with '/': {prefix!r}")
    for segment in prefix[1:-1].split("/"):
        if prefix != "/" and not segment:
            raise ValidationError(f"empty path segment in {prefix!r}")
        if segment and _SEGMENT_FORBIDDEN.search(segment):
            raise ValidationError(f"'@' and ':' are reserved: {prefix!r}")
    return prefix


def validate_fileset_name(name: str) -> str:
    if not _FS_NAME.match(name or ""):
        raise ValidationError(f"invalid fileset name: {name!r}")
    return name


def _parse_version(text: str, raw: str) -> int:
    if not text.isdigit() or int(text) < 1:
        raise ValidationError(f"version must be a positive integer: {raw!r}")
    return int(text)


@dataclass(frozen=True)
class PathSpec:
    raw: str
    path_or_prefix: str
    file_version: Optional[int] = None
    fileset_name: Optional[str] = None
    fileset_version: Optional[int] = None

    @property
    def is_prefix(self) -> bool:
        return self.path_or_prefix.endswith("/")


def parse_spec(raw: str) -> PathSpec:
    if raw.count("@") > 1:
        raise ValidationError(f"multiple '@' in spec: {raw!r}")
    if "@" in raw:
        left, right = raw.split("@", 1)
        if ":" in right:
            name, _, ver = right.partition(":")
            fs_version = _parse_version(ver, raw)
        else:
            name, fs_version = right, None
        validate_fileset_name(name)
        if left.endswith("/"):
            validate_prefix(left)
        else:
            validate_path(left)
        return PathSpec(raw, left, fileset_name=name, fileset_version=fs_version)
    if ":" in raw:
        if raw.count(":") > 1:
            raise ValidationError(f"multiple ':' in spec: {raw!r}")
        path, _, ver = raw.partition(":")
        validate_path(path)
        return PathSpec(raw, path, file_version=_parse_version(ver, raw))
    validate_path(raw)
    return PathSpec(raw, raw)
