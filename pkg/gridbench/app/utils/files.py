"""
File helpers: every artifact is written to a sibling temporary file and
renamed into place, so interrupted commands never leave truncated output.
"""

import os
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, Union

PathLike = Union[str, Path]

PARTIAL_SUFFIX = ".part"


def partial_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + PARTIAL_SUFFIX)


@contextmanager
def atomic_writer(
    path: PathLike,
    mode: str = "w",
    encoding: str = "utf-8",
    keep_partial: bool = False,
) -> Iterator[IO]:
    """
    Open a temporary sibling for writing and rename it over path on success.

    With keep_partial the temporary file is left behind on failure, which
    lets streamed run logs survive an interruption under their .part name.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = partial_path(path)
    kwargs = {} if "b" in mode else {"encoding": encoding, "newline": ""}
    try:
        with open(tmp, mode, **kwargs) as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        if tmp.exists() and not keep_partial:
            tmp.unlink()
        raise


def atomic_write_text(path: PathLike, text: str) -> Path:
    with atomic_writer(path) as handle:
        handle.write(text)
    return Path(path)
