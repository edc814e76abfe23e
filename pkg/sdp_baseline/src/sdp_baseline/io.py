"""Read scheduler instance files and write selection files.

This package deliberately does not import the scheduler. It speaks to it
through the file formats alone, so the reader below re-implements the
instance format contract, including the generator mode: an instance may
store, instead of the full measurement tensor, a recipe (kind, entry
variance, seed) from which every consumer must reproduce the same rows bit
for bit. The recipe pins the pseudo-random discipline exactly: per-step
streams are numpy SeedSequences keyed by (seed, sha256("H"), step).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

import numpy as np

FORMAT_VERSION = "ksched-instance-v1"
SELECTION_FORMAT_VERSION = "ksched-selection-v1"

_MASK64 = (1 << 64) - 1
_H_STREAM = "H"


class ParameterError(ValueError):
    """A caller-supplied argument is out of range or inconsistent."""


class InstanceFormatError(ValueError):
    """An instance or selection document violates the format contract."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


def _tag_to_int(tag: int | str) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _h_stream(seed: int, step: int) -> np.random.Generator:
    seq = np.random.SeedSequence(
        entropy=int(seed) & _MASK64,
        spawn_key=(_tag_to_int(_H_STREAM), int(step)),
    )
    return np.random.default_rng(seq)


def _regenerate_h(kind: str, sigma_h2: float | None, m: int, n: int,
                  horizon: int, seed: int) -> np.ndarray:
    var = 1.0 / m if sigma_h2 is None else float(sigma_h2)
    h = np.empty((horizon, n, m))
    for k in range(horizon):
        rng = _h_stream(seed, k)
        if kind == "gaussian-iid":
            h[k] = rng.standard_normal((n, m)) * np.sqrt(var)
        else:  # bernoulli-centered
            signs = rng.integers(0, 2, size=(n, m)) * 2 - 1
            h[k] = signs * np.sqrt(var)
    return h


@dataclass(frozen=True)
class ParsedInstance:
    """The subset of an instance a relaxation consumer needs, with the
    measurement tensor always materialized."""

    m: int
    n: int
    K: int
    horizon: int
    seed: int
    A: Any            # "identity" | (m, m) | (horizon, m, m)
    Q: np.ndarray
    R_diag: np.ndarray
    Sigma_x: np.ndarray
    H: np.ndarray     # (horizon, n, m)

    def A_at(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.horizon:
            raise ParameterError(f"step {k} outside 1..{self.horizon}")
        if isinstance(self.A, str):
            return np.eye(self.m)
        a = np.asarray(self.A)
        return a if a.ndim == 2 else a[k - 1]

    def H_at(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.horizon:
            raise ParameterError(f"step {k} outside 1..{self.horizon}")
        return self.H[k - 1]

    def predicted_prior(self, step: int) -> np.ndarray:
        """Predict-only prior at `step`: P_1 = A Sigma_x A^T + Q, then
        P_{j+1} = A P_j A^T + Q. Matches the scheduler's scoring convention
        (no selection history enters)."""
        if not 1 <= step <= self.horizon:
            raise ParameterError(f"step {step} outside 1..{self.horizon}")
        p = self.Sigma_x
        for k in range(1, step + 1):
            a = self.A_at(k)
            p = a @ p @ a.T + self.Q
        return (p + p.T) / 2.0


def _require(doc: dict, field: str) -> Any:
    if field not in doc:
        raise InstanceFormatError(field, "missing required field")
    return doc[field]


def _parse_int(doc: dict, field: str) -> int:
    v = _require(doc, field)
    if isinstance(v, bool) or not isinstance(v, int):
        raise InstanceFormatError(field, f"expected an integer, got {v!r}")
    return v


def _parse_array(doc: dict, field: str, shape: tuple[int, ...]) -> np.ndarray:
    try:
        arr = np.asarray(_require(doc, field), dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(field, f"not numeric: {exc}") from None
    if arr.shape != shape:
        raise InstanceFormatError(field, f"expected shape {shape}, got {arr.shape}")
    return arr


def parse_instance(path: str) -> ParsedInstance:
    """Parse an instance file, materializing generator-mode measurements."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFormatError("<instance>", f"unreadable: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("<instance>", "top level must be an object")
    version = _require(doc, "version")
    if version != FORMAT_VERSION:
        raise InstanceFormatError("version", f"expected {FORMAT_VERSION!r}, got {version!r}")

    m = _parse_int(doc, "m")
    n = _parse_int(doc, "n")
    k = _parse_int(doc, "K")
    horizon = _parse_int(doc, "horizon")
    seed = _parse_int(doc, "seed")
    if min(m, n, k, horizon) < 1:
        raise InstanceFormatError("m", "m, n, K, horizon must be >= 1")
    if k > n:
        raise InstanceFormatError("K", f"budget {k} exceeds candidate count {n}")

    a_doc = _require(doc, "A")
    if isinstance(a_doc, str):
        if a_doc != "identity":
            raise InstanceFormatError("A", f"unknown symbolic form {a_doc!r}")
        a: Any = "identity"
    else:
        arr = np.asarray(a_doc, dtype=np.float64)
        if arr.shape not in ((m, m), (horizon, m, m)):
            raise InstanceFormatError("A", f"expected ({m},{m}) or stacked, got {arr.shape}")
        a = arr

    q = _parse_array(doc, "Q", (m, m))
    r_diag = _parse_array(doc, "R_diag", (n,))
    if not (r_diag > 0).all():
        raise InstanceFormatError("R_diag", "noise variances must be > 0")
    sigma_x = _parse_array(doc, "Sigma_x", (m, m))

    h_doc = _require(doc, "H")
    if not isinstance(h_doc, dict) or "kind" not in h_doc:
        raise InstanceFormatError("H", "expected an object with a 'kind'")
    kind = h_doc["kind"]
    if kind == "explicit":
        h = np.asarray(_require(h_doc, "data"), dtype=np.float64)
        if h.shape != (horizon, n, m):
            raise InstanceFormatError("H", f"expected ({horizon},{n},{m}), got {h.shape}")
    elif kind in ("gaussian-iid", "bernoulli-centered"):
        h = _regenerate_h(kind, h_doc.get("sigma_h2"), m, n, horizon, seed)
    else:
        raise InstanceFormatError("H", f"unknown kind {kind!r}")

    return ParsedInstance(m=m, n=n, K=k, horizon=horizon, seed=seed, A=a,
                          Q=q, R_diag=r_diag, Sigma_x=sigma_x, H=h)


def save_selection(path: str, selected, K: int, step: int = 1,
                   meta: dict | None = None) -> None:
    """Write a selection file the scheduler CLI can score."""
    sel = [int(j) for j in selected]
    if len(set(sel)) != len(sel):
        raise ParameterError("selection contains duplicate indices")
    if any(j < 0 for j in sel):
        raise ParameterError("selection indices must be >= 0")
    if step < 1 or K < 1:
        raise ParameterError("step and K must be >= 1")
    if len(sel) > K:
        raise ParameterError("selection larger than budget K")
    doc: dict[str, Any] = {
        "version": SELECTION_FORMAT_VERSION,
        "step": int(step),
        "K": int(K),
        "selected": sel,
    }
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
