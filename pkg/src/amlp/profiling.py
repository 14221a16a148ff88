"""Transaction ingestion and yearly customer profiles."""

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .config import read_key_values, split_list
from .exceptions import ParseError, ProfileError

TRANSACTION_HEADER = ("customer_id", "timestamp", "txn_class", "direction", "amount")
DIRECTIONS = ("credit", "debit")
MEASURES = ("min", "max", "avg", "cnt", "sum")

DEFAULT_CLASSES = ("wire", "cash", "check", "ach", "card", "atm", "internal", "international")


@dataclass(frozen=True)
class TransactionRecord:
    customer_id: str
    timestamp: datetime
    txn_class: str
    direction: str
    amount: float
    row: int = field(default=None, compare=False)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ProfileError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if not (math.isfinite(self.amount) and self.amount >= 0):
            raise ProfileError(f"amount must be finite and non-negative, got {self.amount!r}")


@dataclass(frozen=True)
class ProfileSchema:
    """Ordered transaction classes and directions for one profile year.

    Each (class, direction) pair contributes five features in the order of
    ``MEASURES``.
    """

    classes: tuple
    year: int
    directions: tuple = DIRECTIONS

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "directions", tuple(self.directions))
        if not self.classes:
            raise ProfileError("schema must list at least one transaction class")
        if len(set(self.classes)) != len(self.classes):
            raise ProfileError("schema class names must be unique")
        if not self.directions or len(set(self.directions)) != len(self.directions):
            raise ProfileError("schema directions must be a non-empty list of unique names")
        unknown = set(self.directions) - set(DIRECTIONS)
        if unknown:
            raise ProfileError(f"unknown direction(s) in schema: {sorted(unknown)}")

    @property
    def blocks(self):
        return [(c, d) for c in self.classes for d in self.directions]

    @property
    def feature_names(self):
        return [f"{c}_{d}_{m}" for c, d in self.blocks for m in MEASURES]

    @property
    def n_features(self):
        return len(self.classes) * len(self.directions) * len(MEASURES)

    @classmethod
    def default(cls, year=2022):
        """8 classes x 2 directions x 5 measures = 80 features."""
        return cls(classes=DEFAULT_CLASSES, year=year)

    @classmethod
    def from_file(cls, path):
        kv = read_key_values(path)
        try:
            classes = split_list(kv["classes"])
            year = int(kv["year"])
        except KeyError as exc:
            raise ProfileError(f"schema file {path} is missing key {exc.args[0]!r}") from None
        except ValueError:
            raise ProfileError(f"schema file {path}: year must be an integer") from None
        directions = split_list(kv.get("directions", ",".join(DIRECTIONS)))
        return cls(classes=classes, year=year, directions=directions)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"classes = {', '.join(self.classes)}\n")
            fh.write(f"directions = {', '.join(self.directions)}\n")
            fh.write(f"year = {self.year}\n")


@dataclass
class ProfileMatrix:
    customer_ids: list
    feature_names: list
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["customer_id", *self.feature_names])
            for cid, row in zip(self.customer_ids, self.values):
                writer.writerow([cid, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path):
        """Read any ``customer_id,<name>...`` table: profiles or embeddings."""
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ProfileError(f"{path} is empty") from None
            if not header or header[0] != "customer_id":
                raise ProfileError(f"{path}: first column must be customer_id")
            ids, rows = [], []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(header):
                    raise ProfileError(f"{path}: wrong column count at row {lineno}")
                ids.append(rec[0])
                try:
                    rows.append([float(v) for v in rec[1:]])
                except ValueError:
                    raise ProfileError(f"{path}: unparsable number at row {lineno}") from None
        values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
        return cls(ids, header[1:], values)


def _parse_timestamp(text):
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_transactions(source, classes=None):
    """Parse comma-separated transactions into records, in file order.

    ``source`` is a binary or text stream (or a ``bytes``/``str`` payload).
    When ``classes`` is given, any other ``txn_class`` is rejected.
    Row numbers count the header as row 1.
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")
    allowed = set(classes) if classes is not None else None

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", row=1) from None
    except UnicodeDecodeError:
        raise ParseError("input is not valid UTF-8", row=1) from None
    if tuple(h.strip() for h in header) != TRANSACTION_HEADER:
        raise ParseError(f"header must be {','.join(TRANSACTION_HEADER)}", row=1)

    records = []
    row = 1
    try:
        for row, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(TRANSACTION_HEADER):
                raise ParseError(
                    f"expected {len(TRANSACTION_HEADER)} columns, got {len(fields)} at row {row}", row=row
                )
            cid, ts, cls_, direction, amount = (f.strip() for f in fields)
            try:
                value = float(amount)
            except ValueError:
                raise ParseError(f"unparsable amount {amount!r} at row {row}", row=row) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite amount at row {row}", row=row)
            if value < 0:
                raise ParseError(f"negative amount at row {row}", row=row)
            try:
                when = _parse_timestamp(ts)
            except ValueError:
                raise ParseError(f"unparsable timestamp {ts!r} at row {row}", row=row) from None
            if allowed is not None and cls_ not in allowed:
                raise ParseError(f"unknown txn_class {cls_!r} at row {row}", row=row)
            if direction not in DIRECTIONS:
                raise ParseError(f"unknown direction {direction!r} at row {row}", row=row)
            records.append(TransactionRecord(cid, when, cls_, direction, value, row))
    except UnicodeDecodeError:
        raise ParseError(f"invalid UTF-8 after row {row}", row=row + 1) from None
    return records


def write_transactions(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRANSACTION_HEADER)
        for r in records:
            writer.writerow([
                r.customer_id,
                r.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
                r.txn_class,
                r.direction,
                repr(float(r.amount)),
            ])


def build_profiles(records, schema, roster=None):
    """Aggregate transactions into one row of min/max/avg/cnt/sum blocks per customer.

    Rows are sorted by customer id.  Customers on ``roster`` without
    transactions get an all-zero row, as does any block without activity.
    Sums use ``math.fsum`` so the result does not depend on record order.
    """
    records = list(records)
    if not records and not roster:
        raise ProfileError("no transactions and no customer roster supplied")
    block_index = {b: i for i, b in enumerate(schema.blocks)}
    amounts = defaultdict(list)
    for r in records:
        where = f" at row {r.row}" if r.row is not None else ""
        if r.timestamp.year != schema.year:
            raise ProfileError(f"transaction dated {r.timestamp.date()} is outside year {schema.year}{where}")
        key = (r.txn_class, r.direction)
        if key not in block_index:
            if r.txn_class not in schema.classes:
                raise ProfileError(f"unknown txn_class {r.txn_class!r}{where}")
            raise ProfileError(f"direction {r.direction!r} not in schema{where}")
        amounts[(r.customer_id, block_index[key])].append(r.amount)

    customers = sorted({r.customer_id for r in records} | set(roster or ()))
    row_of = {c: i for i, c in enumerate(customers)}
    n_meas = len(MEASURES)
    values = np.zeros((len(customers), schema.n_features))
    for (cid, b), amts in amounts.items():
        total = math.fsum(amts)
        cnt = len(amts)
        values[row_of[cid], b * n_meas:(b + 1) * n_meas] = (min(amts), max(amts), total / cnt, cnt, total)
    return ProfileMatrix(customers, schema.feature_names, values)


class ProfileScaler(TransformerMixin, BaseEstimator):
    """Column standardization with population standard deviation.

    Constant columns map to zero; their stored scale is 1 so that
    ``inverse_transform`` still recovers them.
    """

    def fit(self, X, y=None):
        X = check_matrix(X, name="X", min_rows=2, error=ProfileError)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        constant = X.max(axis=0) == X.min(axis=0)
        scale[constant] = 1.0
        self.scale_ = scale
        self.constant_ = constant
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_matrix(X, name="X", error=ProfileError)
        if X.shape[1] != self.n_features_in_:
            raise ProfileError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        Z = (X - self.mean_) / self.scale_
        Z[:, self.constant_] = 0.0
        return Z

    def inverse_transform(self, Z):
        check_is_fitted(self, "mean_")
        return np.asarray(Z, dtype=np.float64) * self.scale_ + self.mean_


def standardize(x):
    """Return ``(z, means, stds)`` for a profile matrix or raw array."""
    values = x.values if isinstance(x, ProfileMatrix) else x
    scaler = ProfileScaler().fit(values)
    return scaler.transform(values), scaler.mean_, scaler.scale_
