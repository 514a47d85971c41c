"""Synthetic benchmark designs and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError, DomainError
from .families import get_family
from .solver import FullData

__all__ = ["CaseSpec", "make_design", "make_response", "make_case", "CsvLoadResult", "load_csv"]

NA_TOKENS = frozenset({"", "na", "n/a", "nan", "null", "none"})


@dataclass(frozen=True)
class CaseSpec:
    """One of four benchmark covariate designs plus response settings.

    The designs share a common pattern over the first seven columns:

    * case 1: all columns independent U(0, 1);
    * case 2: column 2 equals column 1 plus U(0, 0.1), a nearly
      collinear pair;
    * case 3: column 2 equals column 1 plus U(0, 1), a moderately
      dependent pair;
    * case 4: like case 3 but columns 6 and 7 are U(-1, 1), so row
      norms no longer track row location.

    Columns beyond the seventh are independent U(0, 1), which is how
    the wide timing design extends case 4.  ``beta_true`` defaults to
    0.5 everywhere.
    """

    case_id: int
    n: int
    p: int = 7
    family: str = "poisson"
    beta_true: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.case_id not in (1, 2, 3, 4):
            raise ValueError(f"case_id must be 1..4, got {self.case_id!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.beta_true is not None:
            bt = tuple(float(b) for b in self.beta_true)
            if len(bt) != self.p:
                raise ValueError(
                    f"beta_true has {len(bt)} entries but p={self.p}"
                )
            object.__setattr__(self, "beta_true", bt)

    def beta(self) -> np.ndarray:
        if self.beta_true is None:
            return np.full(self.p, 0.5)
        return np.asarray(self.beta_true, dtype=float)


def make_design(spec: CaseSpec, rng: np.random.Generator) -> np.ndarray:
    """Generate the covariate matrix, column by column in a fixed order."""
    cols = []
    for j in range(spec.p):
        if j == 1 and spec.case_id in (2, 3, 4):
            spread = 0.1 if spec.case_id == 2 else 1.0
            cols.append(cols[0] + rng.uniform(0.0, spread, spec.n))
        elif j in (5, 6) and spec.case_id == 4:
            cols.append(rng.uniform(-1.0, 1.0, spec.n))
        else:
            cols.append(rng.uniform(0.0, 1.0, spec.n))
    return np.column_stack(cols)


def make_response(family, X, beta, rng: np.random.Generator) -> np.ndarray:
    """Sample responses from the family at scores X @ beta."""
    return get_family(family).sample(np.asarray(X) @ np.asarray(beta, dtype=float), rng)


def make_case(spec: CaseSpec, rng: np.random.Generator) -> tuple[FullData, np.ndarray]:
    """Generate a full benchmark dataset; returns the data and true beta."""
    X = make_design(spec, rng)
    beta = spec.beta()
    y = make_response(spec.family, X, beta, rng)
    return FullData(X, y, get_family(spec.family)), beta


@dataclass(frozen=True)
class CsvLoadResult:
    data: FullData
    columns: tuple[str, ...]
    dropped_rows: int
    dropped_lines: tuple[int, ...] = field(default=(), repr=False)


def _resolve_column(header: list[str], name: str) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise CsvFormatError(
            f"column {name!r} not found; header has {header}"
        ) from None


def load_csv(
    path,
    response_column: str,
    covariate_columns=None,
    family="gaussian",
    add_intercept: bool = False,
    standardize: bool = False,
) -> CsvLoadResult:
    """Read a headered CSV into a validated dataset.

    Rows with missing cells (empty, NA, NaN, null) are dropped and
    counted; any other unparsable cell raises CsvFormatError naming the
    file line and column.  ``covariate_columns`` defaults to every
    column except the response, in header order.  With ``standardize``
    each covariate is centered and scaled to unit variance, and for the
    gaussian family the response is as well.
    """
    family = get_family(family)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: file is empty") from None
        if covariate_columns is None:
            covariate_columns = [h for h in header if h != response_column]
        if not covariate_columns:
            raise CsvFormatError(f"{path}: no covariate columns left")
        y_idx = _resolve_column(header, response_column)
        x_idx = [_resolve_column(header, c) for c in covariate_columns]
        wanted = [y_idx, *x_idx]

        rows = []
        dropped = []
        for record in reader:
            line = reader.line_num
            if len(record) != len(header):
                raise CsvFormatError(
                    f"{path}: line {line} has {len(record)} fields, expected {len(header)}"
                )
            parsed = np.empty(len(wanted))
            missing = False
            for k, idx in enumerate(wanted):
                cell = record[idx].strip()
                if cell.lower() in NA_TOKENS:
                    missing = True
                    break
                try:
                    parsed[k] = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: line {line}, column {header[idx]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            if missing:
                dropped.append(line)
            else:
                rows.append(parsed)

    if not rows:
        raise CsvFormatError(f"{path}: no complete data rows")
    block = np.vstack(rows)
    y = block[:, 0]
    X = block[:, 1:]

    if standardize:
        sd = X.std(axis=0)
        flat = np.flatnonzero(sd == 0.0)
        if flat.size:
            names = [covariate_columns[j] for j in flat]
            raise CsvFormatError(
                f"{path}: cannot standardize constant column(s) {names}"
            )
        X = (X - X.mean(axis=0)) / sd
        if family.name == "gaussian":
            ysd = y.std()
            if ysd == 0.0:
                raise CsvFormatError(f"{path}: response is constant")
            y = (y - y.mean()) / ysd

    columns = list(covariate_columns)
    if add_intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
        columns = ["(intercept)", *columns]

    try:
        data = FullData(X, y, family)
    except DomainError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None
    return CsvLoadResult(
        data=data,
        columns=tuple(columns),
        dropped_rows=len(dropped),
        dropped_lines=tuple(dropped),
    )
