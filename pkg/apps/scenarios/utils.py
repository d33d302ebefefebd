"""
Scenario helpers: key=value config files and output writers
"""
import csv
import logging
from pathlib import Path

from rest_framework.renderers import JSONRenderer

from apps.trajectories.records import format_float

logger = logging.getLogger(__name__)

# config-file spellings that differ from the serializer field names
KEY_ALIASES = {
    't': 't_final',
    'assert': 'assert_checks',
}


def parse_config_file(path):
    """
    Read ``key = value`` lines; ``#`` starts a comment, dashes in keys become
    underscores. Values stay strings for the serializer to validate.
    """
    values = {}
    for number, line in enumerate(Path(path).read_text(encoding='utf-8').splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ValueError(f"{path}:{number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        key = key.lstrip('-').replace('-', '_')
        values[KEY_ALIASES.get(key, key)] = value
    return values


def _cell(value):
    if isinstance(value, bool) or value is None:
        return '' if value is None else str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path, header, rows):
    """Header row plus one row per dict (or sequence), LF line endings"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as stream:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row[column] for column in header]
            writer.writerow([_cell(value) for value in row])
    logger.debug(f"wrote {path}")
    return path


def render_json(data):
    return JSONRenderer().render(data, renderer_context={'indent': 2}) + b'\n'


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(render_json(data))
    logger.debug(f"wrote {path}")
    return path
