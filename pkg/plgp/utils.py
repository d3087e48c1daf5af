import json
import logging
import math
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings

from . import __version__
from .exceptions import DataFormatError

logger = logging.getLogger(__name__)


def version_string():
    """git-describe style version, falling back to the package version"""
    try:
        out = subprocess.run(
            ['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=settings.BASE_DIR, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f'{__version__}+{out.stdout.strip()}'
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class Scaler:
    """Affine maps between raw data and the scaled domain.

    Inputs go to [0, 1]^p; outputs to mean 0 and range 1.
    """

    x_low: np.ndarray
    x_high: np.ndarray
    y_center: float = 0.0
    y_range: float = 1.0

    @classmethod
    def fit(cls, X, Y=None, bounds=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if bounds is not None:
            low, high = (np.asarray(b, dtype=float) for b in zip(*bounds))
        else:
            low, high = X.min(axis=0), X.max(axis=0)
        high = np.where(high > low, high, low + 1.0)
        scaler = cls(x_low=low, x_high=high)
        if Y is not None:
            Y = np.asarray(Y, dtype=float)
            spread = float(Y.max() - Y.min())
            scaler.y_center = float(Y.mean())
            scaler.y_range = spread if spread > 0 else 1.0
        return scaler

    def scale_x(self, X):
        return (np.asarray(X, dtype=float) - self.x_low) / (self.x_high - self.x_low)

    def unscale_x(self, X):
        return np.asarray(X, dtype=float) * (self.x_high - self.x_low) + self.x_low

    def scale_y(self, Y):
        return (np.asarray(Y, dtype=float) - self.y_center) / self.y_range

    def unscale_y(self, Y):
        return np.asarray(Y, dtype=float) * self.y_range + self.y_center

    def to_dict(self):
        return {
            'x_low': self.x_low.tolist(),
            'x_high': self.x_high.tolist(),
            'y_center': self.y_center,
            'y_range': self.y_range,
        }


@dataclass
class ScaledData:
    X_raw: np.ndarray
    Y_raw: np.ndarray
    scaler: Scaler

    @classmethod
    def from_raw(cls, X, Y, bounds=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.asarray(Y, dtype=float)
        return cls(X_raw=X, Y_raw=Y, scaler=Scaler.fit(X, Y, bounds))

    @property
    def X(self):
        return self.scaler.scale_x(self.X_raw)

    @property
    def Y(self):
        return self.scaler.scale_y(self.Y_raw)


@dataclass
class Dataset:
    X: np.ndarray
    columns: list
    y: np.ndarray = None
    labels: np.ndarray = None


def ingest_csv(path, columns=None, response=None, class_column=None):
    """Read a numeric CSV with a header row.

    ``columns`` selects the covariates (default: every column except the
    response or class column). Errors name the column or the 1-based file
    line of the offending row.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as exc:
        raise DataFormatError(f'{path}: {exc}') from exc
    except pd.errors.EmptyDataError as exc:
        raise DataFormatError(f'{path}: file has no header row') from exc

    targets = [c for c in (response, class_column) if c is not None]
    wanted = list(columns) if columns is not None else [c for c in frame.columns if c not in targets]
    for name in wanted + targets:
        if name not in frame.columns:
            raise DataFormatError(f'{path}: missing column {name!r}', column=name)

    numeric = {}
    for name in wanted + targets:
        values = pd.to_numeric(frame[name].str.strip(), errors='coerce')
        bad = np.flatnonzero(values.isna().to_numpy())
        if bad.size:
            line = int(bad[0]) + 2
            raise DataFormatError(
                f'{path}, line {line}: column {name!r} has non-numeric value {frame[name].iloc[bad[0]]!r}',
                line=line, column=name,
            )
        numeric[name] = values.to_numpy(dtype=float)

    X = np.column_stack([numeric[c] for c in wanted]) if wanted else np.zeros((len(frame), 0))
    data = Dataset(X=X, columns=wanted)
    if response is not None:
        data.y = numeric[response]
    if class_column is not None:
        labels = numeric[class_column]
        if not np.all(labels == np.round(labels)):
            raise DataFormatError(f'{path}: class column {class_column!r} must hold integers', column=class_column)
        data.labels = labels.astype(int)
    return data


def emit_csv(table, path):
    """UTF-8 CSV with a header row; floats at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n', encoding='utf-8')
    return path


def _plain(value):
    """Plain Python copy of a report; non-finite floats become None."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, pd.DataFrame):
        return _plain(value.to_dict(orient='records'))
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def to_json(report):
    return json.dumps(_plain(report), indent=2, sort_keys=True, allow_nan=False)


def emit_json(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(report) + '\n', encoding='utf-8')
    return path


def storable(value):
    """JSON-field friendly copy; non-finite floats become null."""
    return _plain(value)
