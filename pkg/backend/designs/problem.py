"""Problem specifications and the file formats of designs and reports.

JSON holds problem specs and reports, CSV holds matrices (dense designs,
sparse design triples, custom regressors and contrasts), plain text holds
exact run orders.
"""
import csv
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from openpyxl import Workbook
from openpyxl.formatting.rule import CellIsRule
from openpyxl.styles import Font, PatternFill
from openpyxl.utils import get_column_letter

from .conf import DEFAULT_TOLERANCES
from .contrasts import CONTROLS, KINDS as CONTRAST_KINDS, build_contrasts, custom_contrasts
from .core import Design
from .criteria import Criterion
from .exact import parse_sequence
from .exceptions import InvalidDesign, SpecError
from .nuisance import CUSTOM, MODEL_KINDS, NONE, build_custom, build_model

logger = logging.getLogger(__name__)

SPARSE_HEADER = ['treatment', 'condition', 'weight']


@dataclass
class ProblemSpec:
    v: int = None
    model: str = NONE
    n: int = None
    degree: int = None
    blocks: int = None
    blocksize: int = None
    rows: int = None
    cols: int = None
    nuisance_csv: str = None
    contrast: str = CONTROLS
    g: int = None
    contrast_csv: str = None
    criterion: str = 'A'
    seed: int = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise SpecError(f'unknown model {self.model!r}; choose from {", ".join(MODEL_KINDS)}')
        if self.contrast not in CONTRAST_KINDS:
            raise SpecError(f'unknown contrast {self.contrast!r}; choose from {", ".join(CONTRAST_KINDS)}')
        Criterion.parse(self.criterion)
        for path in (self.nuisance_csv, self.contrast_csv):
            if path and not os.path.exists(path):
                raise SpecError(f'file not found: {path}')
        if self.model == CUSTOM and not self.nuisance_csv:
            raise SpecError('model custom needs a nuisance CSV')
        if self.contrast == 'custom' and not self.contrast_csv:
            raise SpecError('contrast custom needs a contrast CSV')
        unknown = set(self.tolerances or {}) - set(DEFAULT_TOLERANCES.as_dict())
        if unknown:
            raise SpecError(f'unknown tolerance(s): {sorted(unknown)}')

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise SpecError(f'unknown problem field(s): {sorted(unknown)}')
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f'cannot read problem spec {path}: {exc}') from None
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def with_overrides(self, **overrides):
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ProblemSpec.from_dict(data)

    def get_criterion(self):
        return Criterion.parse(self.criterion)

    def tolerance_set(self, base=None):
        base = DEFAULT_TOLERANCES if base is None else base
        return base.replace(**(self.tolerances or {}))

    def nuisance_model(self):
        table = read_nuisance_csv(self.nuisance_csv) if self.model == CUSTOM else None
        return build_model(
            self.model, n=self.n, degree=self.degree, blocks=self.blocks, blocksize=self.blocksize,
            rows=self.rows, cols=self.cols, table=table,
        )

    def contrasts(self):
        if self.contrast == 'custom':
            q = read_contrast_csv(self.contrast_csv)
            if self.v is not None and q.v != self.v:
                raise SpecError(f'contrast CSV has {q.v} treatments, --v is {self.v}')
            return q
        if self.v is None:
            raise SpecError('--v is required')
        return build_contrasts(self.contrast, self.v, self.g)

    def space(self):
        q = self.contrasts()
        return self.nuisance_model().space(q.v)


def _read_rows(path):
    try:
        with open(path, newline='') as fh:
            return [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    except OSError as exc:
        raise SpecError(f'cannot read {path}: {exc}') from None


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _floats(rows, path):
    try:
        return np.array([[float(cell) for cell in row] for row in rows])
    except ValueError as exc:
        raise SpecError(f'{path}: {exc}') from None


def read_nuisance_csv(path):
    """One row per condition. A non-numeric first column holds condition labels."""
    rows = _read_rows(path)
    if not rows:
        raise SpecError(f'{path} is empty')
    header = ()
    if not all(_is_number(c) for c in rows[0]):
        header, rows = rows[0], rows[1:]
    labels = None
    first_is_label = bool(rows) and not _is_number(rows[0][0])
    if first_is_label or (header and header[0].strip().lower() == 'condition'):
        labels = [row[0].strip() for row in rows]
        rows = [row[1:] for row in rows]
        header = header[1:] if header else header
    return build_custom(_floats(rows, path), labels, tuple(h.strip() for h in header))


def read_contrast_csv(path):
    "Rows are treatments, columns contrasts; an optional header row names the contrasts."
    rows = _read_rows(path)
    labels = ()
    if rows and not all(_is_number(c) for c in rows[0]):
        labels, rows = tuple(c.strip() for c in rows[0]), rows[1:]
    return custom_contrasts(_floats(rows, path), labels)


def dense_rows(design, decimals=6):
    header = ['treatment', *design.space.conditions]
    x = design.dense()
    body = [[str(u + 1), *(f'{value:.{decimals}f}' for value in x[u])] for u in range(design.space.v)]
    return [header, *body]


def sparse_rows(design):
    rows = [list(SPARSE_HEADER)]
    for (u, t), value in design.weights.items():
        rows.append([str(u + 1), design.space.conditions[t], repr(float(value))])
    return rows


def rows_to_text(rows):
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator='\n').writerows(rows)
    return buffer.getvalue()


def write_rows(path, rows):
    with open(path, 'w', newline='') as fh:
        csv.writer(fh, lineterminator='\n').writerows(rows)


def design_from_rows(rows, space):
    "Dense (header of condition labels) or sparse (treatment, condition, weight) CSV rows."
    if not rows:
        raise InvalidDesign('design file is empty')
    header = [c.strip() for c in rows[0]]
    if [h.lower() for h in header] == SPARSE_HEADER:
        weights = {}
        for row in rows[1:]:
            u = int(row[0]) - 1
            t = space.condition_index(row[1].strip())
            weights[(u, t)] = weights.get((u, t), 0.0) + float(row[2])
        matrix = np.zeros((space.v, space.n))
        for (u, t), value in weights.items():
            if not 0 <= u < space.v:
                raise InvalidDesign(f'treatment {u + 1} outside 1..{space.v}')
            matrix[u, t] = value
        return Design.from_dense(space, matrix, normalize=True)
    body = rows[1:]
    if len(header) == space.n + 1:
        header, body = header[1:], [row[1:] for row in body]
    if tuple(header) != space.conditions:
        raise InvalidDesign(f'design columns {header[:4]}... do not match the conditions of the model')
    if len(body) != space.v:
        raise InvalidDesign(f'design has {len(body)} rows, expected {space.v} treatments')
    try:
        matrix = np.array([[float(c) for c in row] for row in body])
    except ValueError as exc:
        raise InvalidDesign(str(exc)) from None
    return Design.from_dense(space, matrix, normalize=True)


def read_design(path, space):
    "CSV files hold weights; any other file holds an exact run order."
    if str(path).lower().endswith('.csv'):
        return design_from_rows(_read_rows(path), space)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f'cannot read {path}: {exc}') from None
    return Design.from_sequence(space, parse_sequence(text, space))


def write_json(path, data):
    with open(path, 'w') as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write('\n')


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def to_json_text(data):
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default)


def design_workbook(rows, title='Design'):
    """Workbook with a bold header, auto-sized columns and positive weights highlighted."""
    wb = Workbook()
    ws = wb.active
    ws.title = title[:31]
    bold_font = Font(bold=True)
    ws.append(rows[0])
    for col_idx in range(1, len(rows[0]) + 1):
        ws.cell(row=1, column=col_idx).font = bold_font

    max_widths = [len(str(h)) for h in rows[0]]
    for row in rows[1:]:
        values = [row[0]] + [float(c) for c in row[1:]]
        ws.append(values)
        for idx, val in enumerate(row):
            max_widths[idx] = max(max_widths[idx], len(str(val)))

    for i, width in enumerate(max_widths, start=1):
        ws.column_dimensions[get_column_letter(i)].width = width + 2

    max_row, max_col = ws.max_row, ws.max_column
    if max_row >= 2 and max_col >= 2:
        highlight = PatternFill(start_color='C6EFCE', end_color='C6EFCE', fill_type='solid')
        rule = CellIsRule(operator='greaterThan', formula=['0'], fill=highlight, font=Font(color='006100'))
        ws.conditional_formatting.add(f'B2:{get_column_letter(max_col)}{max_row}', rule)
    return wb


def workbook_bytes(wb):
    output = io.BytesIO()
    wb.save(output)
    output.seek(0)
    return output.read()
