"""Prediction-function contract, reference models, losses and the subprocess bridge.

Any object with a `predict(NumericTable) -> vector` method and a `label`
works as a model; the two reference models here keep the test suite free of
external ML dependencies, and SubprocessModel runs models from any ecosystem
over a line protocol on stdin/stdout.
"""

from __future__ import annotations

import subprocess
import threading

import numpy as np

from . import _kernels
from .data import NumericTable
from .errors import (
    AspectraError,
    BadK,
    LengthMismatch,
    RankDeficient,
    SchemaMismatch,
    SubprocessFailure,
)

LOSS_KINDS = ("rmse", "mae")


class ModelAdapter:
    """Base contract: deterministic predict, finite outputs, fixed schema."""

    label: str = "model"
    column_names = None  # training schema; None skips the name check

    def predict(self, table: NumericTable) -> np.ndarray:
        raise NotImplementedError

    def expected_p(self):
        return len(self.column_names) if self.column_names is not None else None


class LinearModel(ModelAdapter):
    """Exact linear predictor: intercept + x . coefficients."""

    def __init__(self, intercept, coefficients, column_names=None, label="linear"):
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=np.float64).reshape(-1)
        self.column_names = list(column_names) if column_names is not None else None
        self.label = label

    def expected_p(self):
        return self.coefficients.shape[0]

    def predict(self, table: NumericTable) -> np.ndarray:
        return self.intercept + table.values @ self.coefficients


class KnnModel(ModelAdapter):
    """k nearest neighbours regression, exhaustive euclidean scan.

    Distance ties resolve to the lower training-row index.
    """

    def __init__(self, k, train_values, train_targets, column_names=None, label=None):
        self.k = int(k)
        self.train_values = np.asarray(train_values, dtype=np.float64)
        self.train_targets = np.asarray(train_targets, dtype=np.float64).reshape(-1)
        if not 1 <= self.k <= self.train_values.shape[0]:
            raise BadK(self.k, self.train_values.shape[0])
        self.column_names = list(column_names) if column_names is not None else None
        self.label = label or f"knn(k={self.k})"

    def expected_p(self):
        return self.train_values.shape[1]

    def predict(self, table: NumericTable) -> np.ndarray:
        return _kernels.knn_predict(self.train_values, self.train_targets, table.values, self.k)


class ConstantModel(ModelAdapter):
    """Predicts one fixed value for every row; handy for tests and baselines."""

    def __init__(self, value, column_names=None, label="constant"):
        self.value = float(value)
        self.column_names = list(column_names) if column_names is not None else None
        self.label = label

    def predict(self, table: NumericTable) -> np.ndarray:
        return np.full(table.n, self.value)


class SubprocessModel(ModelAdapter):
    """Bridge to an external model over a batched stdin/stdout line protocol.

    Per predict call the parent writes:
        PREDICT <n> <p>
        <comma-joined column names>
        <n lines of comma-joined decimal values>
    then flushes; the child must answer with exactly n lines, one decimal
    prediction each, and flush. Short or non-numeric output raises
    SubprocessFailure, never a silent coercion. One child process serves all
    calls, so treat each instance as exclusive-access.
    """

    def __init__(self, command, label=None):
        if isinstance(command, str):
            raise AspectraError("SubprocessModel takes an argv list, not a shell string")
        self.command = list(command)
        self.label = label or " ".join(self.command)
        self.column_names = None
        self._proc = None

    def _ensure_proc(self):
        if self._proc is None or self._proc.poll() is not None:
            if self._proc is not None:
                raise SubprocessFailure(
                    f"process exited with code {self._proc.returncode} before the request"
                )
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as e:
                raise SubprocessFailure(f"cannot start {self.command!r}: {e}") from None
        return self._proc

    def predict(self, table: NumericTable) -> np.ndarray:
        proc = self._ensure_proc()
        header = f"PREDICT {table.n} {table.p}\n" + ",".join(table.column_names) + "\n"
        body = "\n".join(
            ",".join(f"{v:.17g}" for v in row) for row in table.values
        ) + "\n"

        # Writer thread avoids a pipe-buffer deadlock with children that
        # stream output before consuming all input.
        write_error = []

        def _write():
            try:
                proc.stdin.write(header)
                proc.stdin.write(body)
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as e:
                write_error.append(e)

        writer = threading.Thread(target=_write)
        writer.start()
        out = np.empty(table.n)
        for i in range(table.n):
            line = proc.stdout.readline()
            if line == "":
                writer.join()
                raise SubprocessFailure(
                    f"expected {table.n} prediction lines, got {i} before EOF"
                )
            try:
                out[i] = float(line.strip())
            except ValueError:
                writer.join()
                raise SubprocessFailure(f"non-numeric prediction line: {line.strip()!r}") from None
        writer.join()
        if write_error:
            raise SubprocessFailure(f"write failed: {write_error[0]}")
        if not np.all(np.isfinite(out)):
            raise SubprocessFailure("non-finite prediction value")
        return out

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.wait(timeout=10)
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def fit_linear(table: NumericTable, y) -> LinearModel:
    """Ordinary least squares with intercept, via orthogonal decomposition."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != table.n:
        raise LengthMismatch(table.n, y.shape[0])
    if table.n <= table.p:
        raise RankDeficient(f"need n > p rows, got n={table.n}, p={table.p}")
    design = np.column_stack([np.ones(table.n), table.values])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < table.p + 1:
        raise RankDeficient(f"design rank {rank} < {table.p + 1} columns")
    return LinearModel(coef[0], coef[1:], column_names=table.column_names)


def fit_knn(table: NumericTable, y, k: int) -> KnnModel:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != table.n:
        raise LengthMismatch(table.n, y.shape[0])
    return KnnModel(k, table.values, y, column_names=table.column_names)


def loss(kind: str, y, yhat) -> float:
    """rmse = sqrt(mean((y - yhat)^2)); mae = mean(|y - yhat|)."""
    if kind not in LOSS_KINDS:
        raise AspectraError(f"loss must be one of {LOSS_KINDS}, got {kind!r}")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape[0] != yhat.shape[0]:
        raise LengthMismatch(y.shape[0], yhat.shape[0])
    if y.shape[0] < 1:
        raise LengthMismatch(1, 0)
    err = y - yhat
    if kind == "rmse":
        return float(np.sqrt(np.mean(err * err)))
    return float(np.mean(np.abs(err)))


def predict(model: ModelAdapter, table: NumericTable, check_determinism: bool = False) -> np.ndarray:
    """Call the model with schema and output-contract checks.

    check_determinism evaluates twice and errors on any difference; useful
    when debugging external models that are secretly stochastic.
    """
    if model.column_names is not None and list(model.column_names) != list(table.column_names):
        raise SchemaMismatch(
            f"model was trained on columns {model.column_names}, got {table.column_names}"
        )
    expected = model.expected_p()
    if expected is not None and expected != table.p:
        raise SchemaMismatch(f"model expects p={expected} columns, got p={table.p}")
    out = np.asarray(model.predict(table), dtype=np.float64).reshape(-1)
    if out.shape[0] != table.n:
        raise SchemaMismatch(f"model returned {out.shape[0]} predictions for {table.n} rows")
    if not np.all(np.isfinite(out)):
        raise AspectraError(f"model {model.label!r} returned non-finite predictions")
    if check_determinism:
        again = np.asarray(model.predict(table), dtype=np.float64).reshape(-1)
        if not np.array_equal(out, again):
            raise AspectraError(
                f"model {model.label!r} is not deterministic: two evaluations differ"
            )
    return out
