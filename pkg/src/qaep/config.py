"""Experiment configuration: a single JSON file describing the chain, the
state models, the observables and the sweep parameters.

Complex scalars are written as [re, im] pairs.  Hermitian matrices are
given either as {"diag": [...]} with real entries or as {"lower": [...]}
listing the rows of the lower triangle, each entry an [re, im] pair; the
upper triangle is filled by conjugation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .blockop import HermitianElement
from .chain import ChainModel
from .errors import CapacityError, ConfigError
from .states import (
    FinitelyCorrelatedState,
    GibbsBlockState,
    ProductState,
    StateModel,
)


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def parse_complex(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    _require(
        isinstance(value, list) and len(value) == 2
        and all(isinstance(x, (int, float)) for x in value),
        path, "complex entries must be [re, im] pairs",
    )
    return complex(value[0], value[1])


def parse_hermitian(spec, dim: int, path: str) -> np.ndarray:
    _require(isinstance(spec, dict), path, "matrix must be an object")
    if "diag" in spec:
        entries = spec["diag"]
        _require(isinstance(entries, list) and len(entries) == dim,
                 f"{path}.diag", f"expected {dim} real entries")
        _require(all(isinstance(x, (int, float)) for x in entries),
                 f"{path}.diag", "diagonal entries must be real numbers")
        return np.diag(np.asarray(entries, dtype=float)).astype(complex)
    if "lower" in spec:
        rows = spec["lower"]
        _require(isinstance(rows, list) and len(rows) == dim,
                 f"{path}.lower", f"expected {dim} rows of the lower triangle")
        mat = np.zeros((dim, dim), dtype=complex)
        for i, row in enumerate(rows):
            _require(isinstance(row, list) and len(row) == i + 1,
                     f"{path}.lower[{i}]", f"expected {i + 1} entries")
            for j, entry in enumerate(row):
                z = parse_complex(entry, f"{path}.lower[{i}][{j}]")
                mat[i, j] = z
                mat[j, i] = z.conjugate()
        _require(bool(np.abs(np.imag(np.diagonal(mat))).max() <= 1e-12) if dim else True,
                 f"{path}.lower", "diagonal of a Hermitian matrix must be real")
        return mat
    raise ConfigError(f"{path}: matrix needs a 'diag' or 'lower' key")


@dataclass
class RunParams:
    n_range: tuple[int, int]
    delta: float = 0.3
    delta_prime: float = 0.1
    t: float | None = None
    block_sizes: list[int] = field(default_factory=lambda: [2, 4, 6])
    grid_points: int = 20
    state_names: list[str] | None = None
    observable_names: list[str] | None = None

    def volumes(self) -> range:
        return range(self.n_range[0], self.n_range[1] + 1)


@dataclass
class ExperimentConfig:
    model: ChainModel
    states: list[tuple[str, StateModel]]
    observables: list[tuple[str, HermitianElement]]
    run: RunParams
    sha256: str
    raw: dict

    def selected_states(self) -> list[tuple[str, StateModel]]:
        if self.run.state_names is None:
            return self.states
        by_name = dict(self.states)
        out = []
        for name in self.run.state_names:
            _require(name in by_name, "run.states", f"unknown state {name!r}")
            out.append((name, by_name[name]))
        return out

    def selected_observables(self) -> list[tuple[str, HermitianElement]]:
        if self.run.observable_names is None:
            return self.observables
        by_name = dict(self.observables)
        out = []
        for name in self.run.observable_names:
            _require(name in by_name, "run.observables", f"unknown observable {name!r}")
            out.append((name, by_name[name]))
        return out


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    _require(isinstance(raw, dict), "$", "top level must be an object")

    mspec = raw.get("model", {})
    _require(isinstance(mspec, dict), "model", "must be an object")
    site_dim = mspec.get("site_dim", 2)
    window = mspec.get("window", 1)
    cap = mspec.get("cap", 4096)
    _require(isinstance(site_dim, int) and site_dim >= 2, "model.site_dim", "need an integer >= 2")
    _require(isinstance(window, int) and window >= 1, "model.window", "need an integer >= 1")
    _require(isinstance(cap, int) and cap >= site_dim, "model.cap", "need an integer >= site_dim")
    model = ChainModel(site_dim, window, cap)

    rspec = raw.get("run", {})
    _require(isinstance(rspec, dict), "run", "must be an object")
    nr = rspec.get("n_range", [2, min(model.n_max, 8)])
    _require(
        isinstance(nr, list) and len(nr) == 2 and all(isinstance(x, int) for x in nr),
        "run.n_range", "need [lo, hi] integers",
    )
    _require(1 <= nr[0] <= nr[1], "run.n_range", "need 1 <= lo <= hi")
    if nr[1] > model.n_max:
        raise CapacityError(
            f"run.n_range: volume {nr[1]} exceeds the cap (n_max = {model.n_max})"
        )
    delta = rspec.get("delta", 0.3)
    delta_prime = rspec.get("delta_prime", 0.1)
    _require(isinstance(delta, (int, float)) and delta > 0, "run.delta", "must be > 0")
    _require(
        isinstance(delta_prime, (int, float)) and delta_prime > 0,
        "run.delta_prime", "must be > 0",
    )
    t = rspec.get("t")
    _require(t is None or isinstance(t, (int, float)), "run.t", "must be a number")
    block_sizes = rspec.get("block_sizes", [2, 4, 6])
    _require(
        isinstance(block_sizes, list) and block_sizes
        and all(isinstance(b, int) and b >= 1 for b in block_sizes),
        "run.block_sizes", "need a list of positive integers",
    )
    grid_points = rspec.get("grid_points", 20)
    _require(
        isinstance(grid_points, int) and grid_points >= 1,
        "run.grid_points", "need a positive integer",
    )
    state_names = rspec.get("states")
    obs_names = rspec.get("observables")
    for key, val in (("states", state_names), ("observables", obs_names)):
        _require(
            val is None or (isinstance(val, list) and all(isinstance(x, str) for x in val)),
            f"run.{key}", "need a list of names",
        )
    run = RunParams(
        n_range=(nr[0], nr[1]),
        delta=float(delta),
        delta_prime=float(delta_prime),
        t=None if t is None else float(t),
        block_sizes=block_sizes,
        grid_points=grid_points,
        state_names=state_names,
        observable_names=obs_names,
    )

    observables: list[tuple[str, HermitianElement]] = []
    for i, ospec in enumerate(raw.get("observables", [])):
        path = f"observables[{i}]"
        _require(isinstance(ospec, dict), path, "must be an object")
        name = ospec.get("name")
        _require(isinstance(name, str) and name, f"{path}.name", "need a name")
        vol = ospec.get("volume", 1)
        _require(isinstance(vol, int) and vol >= 1, f"{path}.volume", "need an integer >= 1")
        model.require_volume(vol)
        dim = model.dim(vol)
        mat = parse_hermitian(ospec.get("matrix"), dim, f"{path}.matrix")
        _require(
            float(np.abs(mat - mat.conj().T).max()) <= 1e-10,
            f"{path}.matrix", "matrix is not Hermitian",
        )
        observables.append((name, model.element(vol, mat)))
    by_obs = dict(observables)
    _require(len(by_obs) == len(observables), "observables", "duplicate names")

    states: list[tuple[str, StateModel]] = []
    for i, sspec in enumerate(raw.get("states", [])):
        path = f"states[{i}]"
        _require(isinstance(sspec, dict), path, "must be an object")
        name = sspec.get("name")
        _require(isinstance(name, str) and name, f"{path}.name", "need a name")
        kind = sspec.get("type")
        if kind == "product":
            phi = parse_hermitian(sspec.get("phi"), model.site_dim, f"{path}.phi")
            states.append((name, ProductState(model, phi)))
        elif kind == "markov":
            tr = sspec.get("transition")
            _require(isinstance(tr, list), f"{path}.transition", "need a matrix")
            states.append(
                (name, FinitelyCorrelatedState.from_markov_chain(model, np.asarray(tr, dtype=float)))
            )
        elif kind == "fcs":
            kr = sspec.get("kraus")
            _require(isinstance(kr, list), f"{path}.kraus", "need nested [re, im] arrays")
            arr = np.asarray(kr, dtype=float)
            _require(
                arr.ndim == 5 and arr.shape[-1] == 2,
                f"{path}.kraus",
                "need shape (n_kraus, site_dim, bond, bond, 2) with [re, im] leaves",
            )
            states.append(
                (name, FinitelyCorrelatedState(model, arr[..., 0] + 1j * arr[..., 1]))
            )
        elif kind == "gibbs_block":
            bs = sspec.get("block_size")
            _require(isinstance(bs, int) and bs >= 1, f"{path}.block_size", "need an integer >= 1")
            ref = sspec.get("observable")
            _require(isinstance(ref, str) and ref in by_obs,
                     f"{path}.observable", "must name a configured observable")
            states.append((name, GibbsBlockState(model, bs, by_obs[ref])))
        else:
            raise ConfigError(
                f"{path}.type: unknown type {kind!r} "
                "(expected product, markov, fcs or gibbs_block)"
            )
    _require(len(dict(states)) == len(states), "states", "duplicate names")

    return ExperimentConfig(
        model=model,
        states=states,
        observables=observables,
        run=run,
        sha256=config_hash(raw),
        raw=raw,
    )
