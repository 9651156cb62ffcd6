"""
File helpers shared by the pipeline stages: atomic writes, JSON I/O and config hashing.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Union

import pandas as pd
from loguru import logger

PathLike = Union[str, Path]


def atomic_write(path: PathLike, writer: Callable[[Path], None]) -> Path:
    """
    Write a file through a temporary sibling and rename it into place.

    Args:
        path: Final destination
        writer: Callable that writes the complete content to the path it is given

    Returns:
        The destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    os.close(fd)
    tmp_path = Path(tmp_name)
    try:
        writer(tmp_path)
        os.replace(tmp_path, target)
    except BaseException:
        tmp_path.unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {target}")
    return target


def write_text(path: PathLike, text: str) -> Path:
    """Atomically write UTF-8 text."""
    return atomic_write(path, lambda p: p.write_text(text, encoding="utf-8", newline="\n"))


def write_json(path: PathLike, data: Any) -> Path:
    """Atomically write JSON with sorted keys so equal data gives equal bytes."""
    return write_text(path, canonical_json(data, indent=2) + "\n")


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
    """Atomically write a DataFrame as CSV without the index."""
    return atomic_write(path, lambda p: frame.to_csv(p, index=False, lineterminator="\n"))


def write_lines(path: PathLike, lines: Iterable[str]) -> Path:
    def _write(p: Path) -> None:
        with open(p, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line)
                f.write("\n")

    return atomic_write(path, _write)


def canonical_json(data: Any, indent: Union[int, None] = None) -> str:
    return json.dumps(data, sort_keys=True, indent=indent, ensure_ascii=False, default=str)


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration mapping."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()
