"""Writers for outage maps, tables and JSON records."""
import csv
import json
import logging
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO, Union

import numpy as np

from .constants import BLACK, WHITE
from .errors import PreconditionError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def shade(outage_map: np.ndarray) -> np.ndarray:
    """Grey levels of a 0/1 outage map: outage cells black, the rest white."""
    outage_map = np.asarray(outage_map)
    if outage_map.ndim != 2:
        raise PreconditionError(f"outage map must be 2-D, got shape {outage_map.shape}")
    return np.where(outage_map.astype(bool), BLACK[0], WHITE[0]).astype(np.uint8)


def write_pgm(path: PathLike, outage_map: np.ndarray):
    """Binary P5 greymap, maxval 255, first row on top."""
    pixels = shade(outage_map)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    logger.info("wrote %dx%d map to %s", cols, rows, path)


def write_png(path: PathLike, outage_map: np.ndarray):
    import pygame

    grey = shade(outage_map)
    rgb = np.repeat(grey[:, :, None], 3, axis=2)
    # surfarray indexes pixels as (x, y)
    surface = pygame.surfarray.make_surface(rgb.transpose(1, 0, 2))
    pygame.image.save(surface, str(path))
    logger.info("wrote %s", path)


def write_csv(fh: TextIO, header: Sequence[str], rows: Iterable[Sequence[object]]):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def write_map_csv(fh: TextIO, axis_rows: np.ndarray, axis_cols: np.ndarray, outage_map: np.ndarray):
    """One ``h1,h2,outage`` line per cell."""
    write_csv(fh, ("h1", "h2", "outage"), (
        (repr(float(h1)), repr(float(h2)), int(outage_map[i, j]))
        for i, h1 in enumerate(axis_rows) for j, h2 in enumerate(axis_cols)
    ))


def format_record(record: Mapping[str, object]) -> str:
    return json.dumps(record, sort_keys=True, default=str)


def write_records(fh: TextIO, records: Iterable[Mapping[str, object]]):
    """JSON objects one per line with sorted keys."""
    for record in records:
        fh.write(format_record(record))
        fh.write("\n")
