"""Run specification documents (JSON, schema version "v1").

A spec looks like::

    {
      "version": "v1",
      "system": {"A": [[0, -1], [1, 0]], "B": [1, 0], "T": 1.5707963267948966},
      "graph": {"q": 2, "weights": [[0, 1], [1, 0]]},
      "mu": {"mode": "infinite"},
      "x0": {"seed": 0},
      "periods": 6,
      "samples_per_period": 16,
      "outputs": {"trajectory_path": "traj.csv", "report_path": "report.json"}
    }

``weights[i][j]`` is gamma_ij, the weight agent i puts on ``x_j - x_i``.
``graph`` may be replaced by ``graph_sequence`` (a list of graph objects,
infinite mu only). ``A`` may be nested rows or a flat row-major list.
A document ``{"version": "v1", "runs": [spec, ...]}`` bundles several runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .deadbeat import AgentSystem
from .errors import SpecError
from .graph import CouplingGraph
from .sync import MuPolicy

SCHEMA_VERSION = "v1"


@dataclass(frozen=True)
class RunSpec:
    system: AgentSystem
    graphs: tuple[CouplingGraph, ...] = ()
    time_varying: bool = False
    mu: MuPolicy = field(default_factory=MuPolicy.infinite)
    x0: np.ndarray | None = None
    seed: int | None = None
    periods: int = 10
    samples_per_period: int = 1
    trajectory_path: str | None = None
    report_path: str | None = None

    @property
    def q(self) -> int | None:
        return self.graphs[0].q if self.graphs else None

    def initial_state(self) -> np.ndarray:
        """``x0`` as given, or drawn uniformly from [-1, 1] with the seed."""
        if self.x0 is not None:
            return self.x0
        rng = np.random.default_rng(self.seed)
        return rng.uniform(-1.0, 1.0, size=self.q * self.system.n)


def _require(doc: dict, key: str, where: str) -> Any:
    if key not in doc:
        raise SpecError(f"{where}: missing required field {key!r}")
    return doc[key]


def _float_array(value, where: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: expected a numeric array ({exc})") from exc
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{where}: entries must be finite")
    return arr


def _parse_system(doc: Any) -> AgentSystem:
    if not isinstance(doc, dict):
        raise SpecError("system: expected an object")
    A = _float_array(_require(doc, "A", "system"), "system.A")
    B = _float_array(_require(doc, "B", "system"), "system.B").ravel()
    T = _require(doc, "T", "system")
    if A.ndim == 1:
        n = math.isqrt(A.size)
        if n * n != A.size or n == 0:
            raise SpecError(f"system.A: flat array of length {A.size} is not square")
        A = A.reshape(n, n)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise SpecError(f"system.A: expected a square matrix, got shape {A.shape}")
    if B.size != A.shape[0]:
        raise SpecError(f"system.B: length {B.size} does not match state dimension {A.shape[0]}")
    if isinstance(T, bool) or not isinstance(T, (int, float)) or not math.isfinite(T) or T <= 0:
        raise SpecError(f"system.T: expected a positive number, got {T!r}")
    return AgentSystem(A=A, B=B, T=float(T))


def _parse_graph(doc: Any, where: str) -> CouplingGraph:
    if not isinstance(doc, dict):
        raise SpecError(f"{where}: expected an object")
    w = _float_array(_require(doc, "weights", where), f"{where}.weights")
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise SpecError(f"{where}.weights: expected a square table, got shape {w.shape}")
    if "q" in doc and doc["q"] != w.shape[0]:
        raise SpecError(f"{where}: q = {doc['q']} but weights are {w.shape[0]}x{w.shape[0]}")
    try:
        return CouplingGraph(w)
    except ValueError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def _parse_mu(doc: Any) -> MuPolicy:
    if not isinstance(doc, dict):
        raise SpecError("mu: expected an object")
    mode = _require(doc, "mode", "mu")
    try:
        if mode == "explicit":
            return MuPolicy.explicit(_require(doc, "value", "mu"))
        if mode == "auto":
            return MuPolicy.auto(doc.get("safety", 1.05))
        if mode == "infinite":
            return MuPolicy.infinite()
    except (TypeError, ValueError) as exc:
        raise SpecError(f"mu: {exc}") from exc
    raise SpecError(f"mu.mode: expected 'explicit', 'auto' or 'infinite', got {mode!r}")


def _positive_int(doc: dict, key: str, default: int, minimum: int) -> int:
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise SpecError(f"{key}: expected an integer >= {minimum}, got {v!r}")
    return v


def parse_spec(doc: Any, require_graph: bool = True) -> RunSpec:
    """Validate a single-run document and build a :class:`RunSpec`."""
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise SpecError(f"version: expected {SCHEMA_VERSION!r}, got {doc.get('version')!r}")
    system = _parse_system(_require(doc, "system", "spec"))

    if "graph" in doc and "graph_sequence" in doc:
        raise SpecError("give either graph or graph_sequence, not both")
    graphs: tuple[CouplingGraph, ...] = ()
    time_varying = False
    if "graph" in doc:
        graphs = (_parse_graph(doc["graph"], "graph"),)
    elif "graph_sequence" in doc:
        seq = doc["graph_sequence"]
        if not isinstance(seq, list) or not seq:
            raise SpecError("graph_sequence: expected a non-empty list")
        graphs = tuple(_parse_graph(g, f"graph_sequence[{i}]") for i, g in enumerate(seq))
        time_varying = True
        if len({g.q for g in graphs}) != 1:
            raise SpecError("graph_sequence: all graphs must have the same q")
    elif require_graph:
        raise SpecError("spec: missing required field 'graph' (or 'graph_sequence')")

    mu = _parse_mu(doc.get("mu", {"mode": "infinite"}))
    if time_varying and mu.mode != "infinite":
        raise SpecError("graph_sequence requires mu.mode = 'infinite'")

    x0 = seed = None
    if graphs:
        raw = _require(doc, "x0", "spec")
        if isinstance(raw, dict):
            if set(raw) != {"seed"}:
                raise SpecError("x0: object form must contain exactly one key, 'seed'")
            seed = raw["seed"]
            if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
                raise SpecError(f"x0.seed: expected a nonnegative integer, got {seed!r}")
        else:
            x0 = _float_array(raw, "x0").ravel()
            expected = graphs[0].q * system.n
            if x0.size != expected:
                raise SpecError(f"x0: length {x0.size}, expected q*n = {expected}")

    outputs = doc.get("outputs", {})
    if not isinstance(outputs, dict):
        raise SpecError("outputs: expected an object")
    return RunSpec(
        system=system,
        graphs=graphs,
        time_varying=time_varying,
        mu=mu,
        x0=x0,
        seed=seed,
        periods=_positive_int(doc, "periods", 10, 0),
        samples_per_period=_positive_int(doc, "samples_per_period", 1, 1),
        trajectory_path=outputs.get("trajectory_path"),
        report_path=outputs.get("report_path"),
    )


def load_document(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec {path} is not valid JSON: {exc}") from exc


def lc_demo_document() -> dict:
    """Two LC oscillators, unit resistive link, quarter-period impulses."""
    return {
        "version": SCHEMA_VERSION,
        "system": {"A": [[0.0, -1.0], [1.0, 0.0]], "B": [1.0, 0.0], "T": math.pi / 2},
        "graph": {"q": 2, "weights": [[0.0, 1.0], [1.0, 0.0]]},
        "mu": {"mode": "infinite"},
        "x0": {"seed": 0},
        "periods": 6,
        "samples_per_period": 16,
        "outputs": {"trajectory_path": "lc_trajectory.csv", "report_path": "lc_report.json"},
    }
