"""Problem instances: the time-varying state-space model plus budget and horizon.

An instance bundles dynamics (A, Q), prior (Sigma_x, optional x0_mean), the
per-step measurement rows H_k with per-sensor noise variances, the selection
budget K, and the horizon T. Instances are immutable; every array is stored
read-only so they can be shared across worker processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .rng import substream

FORMAT_VERSION = "ksched-instance-v1"
SELECTION_FORMAT_VERSION = "ksched-selection-v1"

_H_STREAM = "H"
_SYM_RTOL = 1e-12
_EIG_FLOOR = -1e-10


class ParameterError(ValueError):
    """Invalid dimensions or parameter values."""


class InstanceFormatError(ValueError):
    """Malformed instance file; carries the offending field name."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    out.setflags(write=False)
    return out


def _check_sym_psd(mat: np.ndarray, name: str) -> None:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.T).max() > _SYM_RTOL * scale:
        raise ParameterError(f"{name} is not symmetric within {_SYM_RTOL} relative")
    w = np.linalg.eigvalsh((mat + mat.T) / 2.0)
    if w.min() < _EIG_FLOOR:
        raise ParameterError(f"{name} is not PSD: min eigenvalue {w.min():.3e}")


@dataclass(frozen=True)
class MeasurementGeneratorSpec:
    """How measurement rows are produced.

    kind "gaussian-iid": rows i.i.d. N(0, sigma_h2 * I_m).
    kind "bernoulli-centered": entries exactly +-sqrt(sigma_h2); at the
        canonical sigma_h2 = 1/m every row has unit squared norm.
    kind "explicit": rows supplied by the caller, nothing generated.
    """

    kind: str = "gaussian-iid"
    sigma_h2: float | None = None  # None means the canonical 1/m

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian-iid", "bernoulli-centered", "explicit"):
            raise ParameterError(f"unknown generator kind {self.kind!r}")
        if self.sigma_h2 is not None and not self.sigma_h2 > 0:
            raise ParameterError("sigma_h2 must be > 0")

    def row_variance(self, m: int) -> float:
        return 1.0 / m if self.sigma_h2 is None else float(self.sigma_h2)


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable selection problem over a filtering horizon.

    H has shape (horizon, n, m): one n x m measurement matrix per step.
    A is either the string "identity", one (m, m) matrix shared by all steps,
    or a (horizon, m, m) stack. R_diag holds the per-sensor noise variances.
    """

    m: int
    n: int
    K: int
    horizon: int
    A: Any
    Q: np.ndarray
    R_diag: np.ndarray
    Sigma_x: np.ndarray
    H: np.ndarray
    seed: int
    generator: MeasurementGeneratorSpec = field(
        default_factory=lambda: MeasurementGeneratorSpec("explicit")
    )
    x0_mean: np.ndarray | None = None  # optional extension; None means zero

    def __post_init__(self) -> None:
        for name in ("m", "n", "K", "horizon"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")
        if self.K > self.n:
            raise ParameterError(f"budget K={self.K} exceeds sensor count n={self.n}")

        object.__setattr__(self, "Q", _frozen(self.Q))
        object.__setattr__(self, "R_diag", _frozen(self.R_diag))
        object.__setattr__(self, "Sigma_x", _frozen(self.Sigma_x))
        object.__setattr__(self, "H", _frozen(self.H))
        if self.x0_mean is not None:
            object.__setattr__(self, "x0_mean", _frozen(self.x0_mean))

        if self.H.shape != (self.horizon, self.n, self.m):
            raise ParameterError(
                f"H must have shape {(self.horizon, self.n, self.m)}, got {self.H.shape}"
            )
        if self.R_diag.shape != (self.n,):
            raise ParameterError(f"R_diag must have shape ({self.n},)")
        if not (self.R_diag > 0).all():
            raise ParameterError("non-positive variance in R_diag")
        _check_sym_psd(self.Q, "Q")
        _check_sym_psd(self.Sigma_x, "Sigma_x")
        if self.Q.shape != (self.m, self.m) or self.Sigma_x.shape != (self.m, self.m):
            raise ParameterError("Q and Sigma_x must be m x m")
        if self.x0_mean is not None and self.x0_mean.shape != (self.m,):
            raise ParameterError(f"x0_mean must have shape ({self.m},)")

        if isinstance(self.A, str):
            if self.A != "identity":
                raise ParameterError(f"symbolic A must be 'identity', got {self.A!r}")
        else:
            a = _frozen(self.A)
            if a.shape not in ((self.m, self.m), (self.horizon, self.m, self.m)):
                raise ParameterError(
                    f"A must be 'identity', (m,m), or (horizon,m,m); got {a.shape}"
                )
            object.__setattr__(self, "A", a)

    def A_at(self, k: int) -> np.ndarray:
        """Transition matrix for step k (1-based, as recorded in reports)."""
        if not 1 <= k <= self.horizon:
            raise ParameterError(f"step {k} outside horizon 1..{self.horizon}")
        if isinstance(self.A, str):
            return np.eye(self.m)
        if self.A.ndim == 2:
            return self.A
        return self.A[k - 1]

    def H_at(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.horizon:
            raise ParameterError(f"step {k} outside horizon 1..{self.horizon}")
        return self.H[k - 1]

    def prior_mean(self) -> np.ndarray:
        if self.x0_mean is None:
            return np.zeros(self.m)
        return self.x0_mean.copy()


def _generate_h(
    spec: MeasurementGeneratorSpec, m: int, n: int, horizon: int, seed: int
) -> np.ndarray:
    """Per-step rows from substream (seed, "H", k): horizon growth never
    changes earlier steps, and fill order is fixed step-major, row-major."""
    var = spec.row_variance(m)
    h = np.empty((horizon, n, m))
    for k in range(horizon):
        rng = substream(seed, _H_STREAM, k)
        if spec.kind == "gaussian-iid":
            h[k] = rng.standard_normal((n, m)) * np.sqrt(var)
        else:  # bernoulli-centered
            signs = rng.integers(0, 2, size=(n, m)) * 2 - 1
            h[k] = signs * np.sqrt(var)
    return h


def generate_instance(
    spec: MeasurementGeneratorSpec,
    m: int,
    n: int,
    K: int,
    horizon: int,
    q_var: float,
    r_var: float,
    seed: int,
) -> ProblemInstance:
    """Canonical random instance: A = identity, Q = q_var*I, R = r_var*I,
    Sigma_x = I, and measurement rows drawn per `spec` fresh each step."""
    if spec.kind == "explicit":
        raise ParameterError("generate_instance needs a random generator kind")
    if not (q_var > 0 and r_var > 0):
        raise ParameterError("q_var and r_var must be > 0")
    if m < 1 or n < 1 or horizon < 1:
        raise ParameterError("m, n, horizon must be >= 1")
    h = _generate_h(spec, m, n, horizon, seed)
    return ProblemInstance(
        m=m,
        n=n,
        K=K,
        horizon=horizon,
        A="identity",
        Q=q_var * np.eye(m),
        R_diag=np.full(n, float(r_var)),
        Sigma_x=np.eye(m),
        H=h,
        seed=int(seed),
        generator=spec,
    )


def _matrix_to_list(a: np.ndarray) -> list:
    return a.tolist()


def save_instance(instance: ProblemInstance, path: str, h_mode: str = "explicit") -> None:
    """Write an instance file.

    h_mode "explicit" stores the full H tensor; "generator" stores the
    generator spec + seed instead (valid only for random kinds, reproduced
    bit-exactly on load by the fixed PRNG discipline).
    """
    if h_mode not in ("explicit", "generator"):
        raise ParameterError(f"h_mode must be 'explicit' or 'generator', got {h_mode!r}")
    doc: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "m": instance.m,
        "n": instance.n,
        "K": instance.K,
        "horizon": instance.horizon,
        "seed": instance.seed,
        "A": instance.A if isinstance(instance.A, str) else _matrix_to_list(instance.A),
        "Q": _matrix_to_list(instance.Q),
        "R_diag": _matrix_to_list(instance.R_diag),
        "Sigma_x": _matrix_to_list(instance.Sigma_x),
    }
    if instance.x0_mean is not None:
        doc["x0_mean"] = _matrix_to_list(instance.x0_mean)
    gen = instance.generator
    if h_mode == "generator":
        if gen.kind == "explicit":
            raise ParameterError("h_mode='generator' requires a random generator kind")
        doc["H"] = {"kind": gen.kind, "sigma_h2": gen.sigma_h2}
    else:
        doc["H"] = {
            "kind": "explicit",
            "data": _matrix_to_list(instance.H),
            "source": None if gen.kind == "explicit" else gen.kind,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _require(doc: dict, field_name: str) -> Any:
    if field_name not in doc:
        raise InstanceFormatError(field_name, "missing required field")
    return doc[field_name]


def load_instance(path: str) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError("<document>", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("<document>", "top level must be an object")
    version = _require(doc, "version")
    if version != FORMAT_VERSION:
        raise InstanceFormatError("version", f"unsupported version {version!r}")

    def parse_int(name: str) -> int:
        v = _require(doc, name)
        if not isinstance(v, int) or isinstance(v, bool):
            raise InstanceFormatError(name, f"expected integer, got {v!r}")
        return v

    m = parse_int("m")
    n = parse_int("n")
    K = parse_int("K")
    horizon = parse_int("horizon")
    seed = parse_int("seed")

    def parse_array(name: str, shape: tuple[int, ...]) -> np.ndarray:
        raw = _require(doc, name)
        try:
            arr = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InstanceFormatError(name, f"not a numeric array: {exc}") from exc
        if arr.shape != shape:
            raise InstanceFormatError(name, f"expected shape {shape}, got {arr.shape}")
        return arr

    a_raw = _require(doc, "A")
    if isinstance(a_raw, str):
        if a_raw != "identity":
            raise InstanceFormatError("A", f"symbolic A must be 'identity', got {a_raw!r}")
        a: Any = "identity"
    else:
        a = np.asarray(a_raw, dtype=np.float64)
        if a.shape not in ((m, m), (horizon, m, m)):
            raise InstanceFormatError("A", f"bad shape {a.shape}")

    q = parse_array("Q", (m, m))
    r_diag = parse_array("R_diag", (n,))
    if not (r_diag > 0).all():
        raise InstanceFormatError("R_diag", "non-positive variance")
    sigma_x = parse_array("Sigma_x", (m, m))
    x0_mean = parse_array("x0_mean", (m,)) if "x0_mean" in doc else None

    h_field = _require(doc, "H")
    if not isinstance(h_field, dict) or "kind" not in h_field:
        raise InstanceFormatError("H", "must be an object with a 'kind'")
    kind = h_field["kind"]
    if kind == "explicit":
        try:
            h = np.asarray(h_field["data"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceFormatError("H.data", f"bad explicit tensor: {exc}") from exc
        if h.shape != (horizon, n, m):
            raise InstanceFormatError(
                "H.data", f"expected shape {(horizon, n, m)}, got {h.shape}"
            )
        source = h_field.get("source")
        gen = MeasurementGeneratorSpec("explicit" if source is None else source)
    elif kind in ("gaussian-iid", "bernoulli-centered"):
        gen = MeasurementGeneratorSpec(kind, h_field.get("sigma_h2"))
        h = _generate_h(gen, m, n, horizon, seed)
    else:
        raise InstanceFormatError("H.kind", f"unknown kind {kind!r}")

    try:
        return ProblemInstance(
            m=m, n=n, K=K, horizon=horizon, A=a, Q=q, R_diag=r_diag,
            Sigma_x=sigma_x, H=h, seed=seed, generator=gen, x0_mean=x0_mean,
        )
    except ParameterError as exc:
        raise InstanceFormatError("<instance>", str(exc)) from exc


def save_selection(path: str, selected, K: int, step: int = 1, meta: dict | None = None) -> None:
    """Write a selection file: the row indices some scheduler chose for one
    time step, scoreable against any instance with matching dimensions."""
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


def load_selection(path: str) -> dict:
    """Read a selection file; returns {'step', 'K', 'selected', 'meta'}."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError("<document>", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("<document>", "top level must be an object")
    version = _require(doc, "version")
    if version != SELECTION_FORMAT_VERSION:
        raise InstanceFormatError("version", f"unsupported version {version!r}")
    step = _require(doc, "step")
    k = _require(doc, "K")
    raw = _require(doc, "selected")
    if not isinstance(step, int) or step < 1:
        raise InstanceFormatError("step", f"expected positive integer, got {step!r}")
    if not isinstance(k, int) or k < 1:
        raise InstanceFormatError("K", f"expected positive integer, got {k!r}")
    if not isinstance(raw, list) or not all(
        isinstance(j, int) and not isinstance(j, bool) and j >= 0 for j in raw
    ):
        raise InstanceFormatError("selected", "expected a list of indices >= 0")
    if len(set(raw)) != len(raw):
        raise InstanceFormatError("selected", "duplicate indices")
    if len(raw) > k:
        raise InstanceFormatError("selected", "selection larger than budget K")
    return {"step": step, "K": k, "selected": list(raw), "meta": doc.get("meta")}


def predicted_prior(instance: ProblemInstance, step: int = 1) -> np.ndarray:
    """Predict-only prior P_{k|k-1} at `step`, i.e. the covariance obtained by
    running only time updates from Sigma_x. Step 1 gives A1 Sigma_x A1' + Q.
    This is the shared convention for scoring selections outside a filter run.
    """
    p = instance.Sigma_x.copy()
    for k in range(1, step + 1):
        a = instance.A_at(k)
        p = a @ p @ a.T + instance.Q
        p = (p + p.T) / 2.0
    return p
