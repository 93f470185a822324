"""
Deterministic CSV and JSON artifacts.
"""
import csv
import json
import logging
import math
import os

import numpy as np

from tilepress import appsettings
from tilepress.cells import format_word

logger = logging.getLogger(__name__)


def format_real(value, digits=None):
    """
    Format a float with enough significant digits to read back the same binary64 value.
    """
    digits = appsettings.TILEPRESS_CSV_DIGITS if digits is None else digits
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return "{0:.{1}g}".format(value, digits)


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no infinities; keep them readable.
        if math.isinf(value) or math.isnan(value):
            return str(value)
        return value
    return value


def write_csv(path, header, rows):
    """
    Write an RFC 4180 CSV file with a header row.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    logger.info("Wrote %s", path)
    return path


def write_json(path, data):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(_jsonable(data), fp, sort_keys=True, indent=2)
        fp.write("\n")
    logger.info("Wrote %s", path)
    return path


def dumps(data):
    return json.dumps(_jsonable(data), sort_keys=True, indent=2)


TILE_HEADER = ("level", "word", "color", "position", "face", "a", "b", "side", "touches_equator")


def tile_rows(block):
    """
    Rows of a tile dump; the block must keep its words.
    """
    names = ("white", "black")
    a, b = block.a, block.b
    touches = block.touches_equator()
    side = "1/{0}".format(block.scale)
    for index in range(len(block)):
        yield (
            block.n,
            format_word(block.address(index).word),
            names[block.color[index]],
            names[block.position[index]],
            names[block.position[index]],
            "{0}/{1}".format(a[index], block.scale),
            "{0}/{1}".format(b[index], block.scale),
            side,
            bool(touches[index]),
        )
