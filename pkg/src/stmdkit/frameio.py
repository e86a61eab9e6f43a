"""Reading and writing frames (binary PGM, PNG) and experiment CSV files."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError

FRAME_EXTENSIONS = (".pgm", ".png")


def write_pgm(path, frame: np.ndarray) -> None:
    """Write a [0,1] float frame as binary (P5) 8-bit PGM."""
    frame = np.asarray(frame)
    data = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM into a [0,1] float frame."""
    with open(path, "rb") as fh:
        data = fh.read()

    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InvalidParameterError(f"truncated PGM header in {path}")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval

    if tokens[0] != b"P5":
        raise InvalidParameterError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise InvalidParameterError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    if len(data) - pos < w * h:
        raise InvalidParameterError(f"{path}: pixel payload shorter than {w}x{h}")
    raw = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    return raw.reshape(h, w).astype(float) / 255.0


def read_frame(path) -> np.ndarray:
    """Read a grayscale frame from PGM or PNG; color PNGs are converted to luminance."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    from PIL import Image

    with Image.open(path) as img:
        # "L" applies the standard 0.299/0.587/0.114 luminance weighting
        gray = img.convert("L")
        return np.asarray(gray, dtype=float) / 255.0


def list_frame_files(directory) -> list[Path]:
    """Frame files in a directory, sorted by filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidParameterError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir()
                  if p.suffix.lower() in FRAME_EXTENSIONS and p.is_file())


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_gt_csv(path) -> list[tuple[int, float, float]]:
    """Read ground-truth rows (frame, cx, cy)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append((int(row["frame"]), float(row["cx"]), float(row["cy"])))
    return out
