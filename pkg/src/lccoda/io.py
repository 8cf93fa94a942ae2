"""Reading death-count panels from long CSV and writing result tables.

Input rows look like ``year,age_band,cause,sex,deaths``. Labels are ordered
by first appearance unless an ordering sidecar (JSON with ``age_band`` and
``cause`` lists) is supplied. Output CSVs start with ``#`` comment lines
carrying the package version and the run manifest; :func:`ingest` skips
such lines, so emitted panels read back unchanged.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .composition import DeathCountPanel
from .errors import ConfigError, DuplicateCell, MissingCell, NegativeDeaths, ParseError

COLUMNS = ("year", "age_band", "cause", "sex", "deaths")


@dataclass(frozen=True)
class IngestReport:
    rows: int
    zero_cells: tuple  # (year, age_band, cause)

    @property
    def n_zero(self):
        return len(self.zero_cells)


def _data_lines(fh):
    for lineno, line in enumerate(fh, start=1):
        if line.startswith("#") or not line.strip():
            continue
        yield lineno, line


def _ordered(seen, explicit, name):
    if explicit is None:
        return list(seen)
    explicit = [str(x) for x in explicit]
    unknown = [x for x in seen if x not in explicit]
    if unknown:
        raise ConfigError(f"{name} labels missing from ordering file: {unknown}")
    return [x for x in explicit if x in seen]


def load_ordering(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return {"age_band": data.get("age_band"), "cause": data.get("cause")}


def ingest(path, sex=None, ordering=None):
    """Read a long-format CSV into a dense :class:`DeathCountPanel`.

    Returns ``(panel, report)``; the report lists every zero-count cell.
    """
    cells = {}
    sexes, ages, causes, years = {}, {}, {}, set()
    with open(path, encoding="utf-8", newline="") as fh:
        lines = _data_lines(fh)
        try:
            header_no, header_line = next(lines)
        except StopIteration:
            raise ParseError("file is empty", 1) from None
        header = [h.strip() for h in next(csv.reader([header_line]))]
        if sorted(header) != sorted(COLUMNS):
            raise ParseError(f"expected columns {','.join(COLUMNS)}, got {header}", header_no)
        pos = {name: header.index(name) for name in COLUMNS}
        n_rows = 0
        for lineno, line in lines:
            row = next(csv.reader([line]))
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            rec_sex = row[pos["sex"]].strip()
            sexes.setdefault(rec_sex, None)
            if sex is not None and rec_sex != sex:
                continue
            try:
                year = int(row[pos["year"]])
            except ValueError:
                raise ParseError(f"bad year {row[pos['year']]!r}", lineno) from None
            try:
                deaths = float(row[pos["deaths"]])
            except ValueError:
                raise ParseError(f"bad deaths value {row[pos['deaths']]!r}", lineno) from None
            if not np.isfinite(deaths):
                raise ParseError(f"non-finite deaths {deaths}", lineno)
            if deaths < 0:
                raise NegativeDeaths(f"line {lineno}: negative deaths {deaths}")
            age, cause = row[pos["age_band"]].strip(), row[pos["cause"]].strip()
            key = (year, age, cause, rec_sex)
            if key in cells:
                raise DuplicateCell(
                    f"line {lineno}: duplicate cell year={year} age_band={age} "
                    f"cause={cause} sex={rec_sex} (first seen on line {cells[key][1]})"
                )
            cells[key] = (deaths, lineno)
            ages.setdefault(age, None)
            causes.setdefault(cause, None)
            years.add(year)
            n_rows += 1

    if sex is None:
        if len(sexes) > 1:
            raise ConfigError(f"file holds several sexes {list(sexes)}; choose one with --sex")
        sex = next(iter(sexes), "total")
    if not cells:
        raise MissingCell(f"no rows for sex {sex!r}")

    ordering = ordering or {}
    age_list = _ordered(ages, ordering.get("age_band"), "age_band")
    cause_list = _ordered(causes, ordering.get("cause"), "cause")
    year_list = list(range(min(years), max(years) + 1))
    counts = np.empty((len(year_list), len(age_list), len(cause_list)))
    zeros = []
    for t, y in enumerate(year_list):
        for u, a in enumerate(age_list):
            for c, k in enumerate(cause_list):
                hit = cells.get((y, a, k, sex))
                if hit is None:
                    raise MissingCell(f"missing cell year={y} age_band={a} cause={k} sex={sex}")
                counts[t, u, c] = hit[0]
                if hit[0] == 0:
                    zeros.append((y, a, k))
    panel = DeathCountPanel(year_list, age_list, cause_list, counts, sex)
    return panel, IngestReport(n_rows, tuple(zeros))


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)
    return str(x)


def provenance_lines(manifest):
    lines = [f"# lccoda {__version__}"]
    if manifest is not None:
        lines.append("# manifest: " + json.dumps(manifest, sort_keys=True))
    return lines


def write_csv(path, header, rows, manifest=None):
    """Write ``rows`` under ``header`` with a provenance comment block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in provenance_lines(manifest):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path):
    """Rows of an emitted CSV as dicts, skipping the provenance block."""
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(line for _, line in _data_lines(fh)))


def write_panel(panel, path, manifest=None):
    rows = []
    for t, y in enumerate(panel.years):
        for u, a in enumerate(panel.age_bands):
            for c, k in enumerate(panel.causes):
                rows.append((y, a, k, panel.sex, float(panel.counts[t, u, c])))
    return write_csv(path, COLUMNS, rows, manifest)


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
