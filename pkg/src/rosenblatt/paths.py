"""Coupled random walks on the grid t_m = m/n, m = 0..n.

Three processes share one noise sequence xi_1..xi_n:

    walk        W(m/n) = sum_{i<=m} xi_i / sqrt(n)
    fbm         B(m/n) = sum_{i<=m} [n int_{cell_i} K(m/n, s) ds] xi_i / sqrt(n)
    rosenblatt  Z(m/n) = sum_{i != j <= m} c_ij(m) xi_i xi_j

Paths are cadlag step functions between grid points.  The Rosenblatt walk has
two generators: the fast factorised one accumulates, per grid panel, the
square of the running kernel-weighted noise sum at shared quadrature nodes
(O(n^2) per path); the direct one evaluates the quadratic form against the
full weight table at every step and serves as the brute-force oracle.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .kernel import DEFAULT_QUAD, DomainError, HurstParams, QuadConfig, get_engine


class NoiseKind(str, Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"


class ProcessTag(str, Enum):
    WALK = "walk"
    FBM = "fbm"
    ROSENBLATT = "rosenblatt"


_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    """One splitmix64 output step; the documented stream-splitting primitive."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of ensemble member `index`: splitmix64(master + (index+1) * golden)."""
    return _splitmix64((master_seed + (index + 1) * _GOLDEN) & _MASK)


@dataclass(frozen=True)
class NoiseSequence:
    """Reproducible i.i.d. mean-zero unit-variance driving noise."""

    kind: NoiseKind
    seed: int
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.size


def make_noise(n: int, kind: NoiseKind | str, seed: int) -> NoiseSequence:
    """Draw xi_1..xi_n from a counter-based generator (Philox) keyed by seed."""
    if n < 1:
        raise DomainError(f"noise length must be positive, got {n}")
    kind = NoiseKind(kind)
    rng = np.random.Generator(np.random.Philox(key=seed & _MASK))
    if kind is NoiseKind.RADEMACHER:
        values = rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
    else:
        values = rng.standard_normal(n)
    values.setflags(write=False)
    return NoiseSequence(kind=kind, seed=seed, values=values)


@dataclass
class GridPath:
    """One simulated path at grid times m/n, values[0] = 0, cadlag off-grid."""

    n: int
    values: np.ndarray
    process_tag: ProcessTag

    def __post_init__(self):
        if self.values.shape != (self.n + 1,):
            raise DomainError("GridPath needs n+1 values")
        if self.values[0] != 0.0:
            raise DomainError("paths start at 0")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def value_at(self, t: float) -> float:
        """Step interpolation matching the floor(n t)/n time convention."""
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {t}")
        return float(self.values[min(int(np.floor(self.n * t)), self.n)])


@dataclass
class PathEnsemble:
    """M paths sharing (n, process, noise kind); row k uses derive_seed(seed, k)."""

    values: np.ndarray          # (M, n+1)
    n: int
    process_tag: ProcessTag
    kind: NoiseKind
    master_seed: int
    params: HurstParams | None = None
    quad: QuadConfig | None = None

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def paths(self):
        for row in self.values:
            yield GridPath(n=self.n, values=row, process_tag=self.process_tag)

    def values_at(self, t: float) -> np.ndarray:
        m = min(int(np.floor(self.n * t)), self.n)
        return self.values[:, m]


# ---------------------------------------------------------------------------
# single-path constructors
# ---------------------------------------------------------------------------

def random_walk(noise: NoiseSequence) -> GridPath:
    """Rescaled simple random walk W(m/n) = sum_{i<=m} xi_i / sqrt(n)."""
    n = noise.n
    values = np.concatenate([[0.0], np.cumsum(noise.values) / np.sqrt(n)])
    return GridPath(n=n, values=values, process_tag=ProcessTag.WALK)


def fbm_walk(noise: NoiseSequence, p: HurstParams, q: QuadConfig = DEFAULT_QUAD) -> GridPath:
    """Kernel-disturbed walk converging to fBm with Hurst index p.Hp."""
    n = noise.n
    T = get_engine(n, p, q).fbm_matrix()
    values = np.concatenate([[0.0], (T @ noise.values) / np.sqrt(n)])
    return GridPath(n=n, values=values, process_tag=ProcessTag.FBM)


def rosenblatt_walk(noise: NoiseSequence, p: HurstParams, q: QuadConfig = DEFAULT_QUAD,
                    method: str = "factorized") -> GridPath:
    """Off-diagonal quadratic-form walk converging to the Rosenblatt process.

    method="factorized" streams panel increments; method="direct" re-evaluates
    xi' C(m) xi against the full weight table at every grid time (the
    brute-force oracle, O(n^3) kernel work).
    """
    n = noise.n
    xi = noise.values[None, :]
    if method == "factorized":
        inc = get_engine(n, p, q).quadratic_increments(
            xi, unit_squares=noise.kind is NoiseKind.RADEMACHER)
        values = np.concatenate([[0.0], np.cumsum(inc[0])])
    elif method == "direct":
        eng = get_engine(n, p, q)
        values = np.zeros(n + 1)
        x = noise.values
        for m in range(1, n + 1):
            C = eng.table_matrix(m)
            values[m] = x @ C @ x
    else:
        raise DomainError(f"unknown method {method!r}")
    return GridPath(n=n, values=values, process_tag=ProcessTag.ROSENBLATT)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def simulate_ensemble(count: int, master_seed: int, kind: NoiseKind | str,
                      p: HurstParams | None, q: QuadConfig,
                      process_tag: ProcessTag | str, n: int,
                      threads: int = 1) -> PathEnsemble:
    """count independent paths; member k is seeded by derive_seed(master_seed, k).

    Kernel caches are built once and shared read-only, so generation is safe
    to chunk across threads; results are identical for any thread count.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    kind = NoiseKind(kind)
    process_tag = ProcessTag(process_tag)
    if process_tag is not ProcessTag.WALK and p is None:
        raise DomainError("fbm and rosenblatt ensembles need Hurst parameters")

    xi = np.empty((count, n))
    for k in range(count):
        xi[k] = make_noise(n, kind, derive_seed(master_seed, k)).values

    values = np.zeros((count, n + 1))
    if process_tag is ProcessTag.WALK:
        values[:, 1:] = np.cumsum(xi, axis=1) / np.sqrt(n)
    elif process_tag is ProcessTag.FBM:
        T = get_engine(n, p, q).fbm_matrix()
        values[:, 1:] = (xi @ T.T) / np.sqrt(n)
    else:
        eng = get_engine(n, p, q)
        eng.panel(n)  # freeze caches before any worker touches them
        unit = kind is NoiseKind.RADEMACHER

        def fill(lo, hi):
            values[lo:hi, 1:] = np.cumsum(eng.quadratic_increments(xi[lo:hi], unit), axis=1)

        if threads > 1 and count >= 2 * threads:
            from concurrent.futures import ThreadPoolExecutor
            bounds = np.linspace(0, count, threads + 1, dtype=int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(lambda b: fill(b[0], b[1]), zip(bounds[:-1], bounds[1:])))
        else:
            fill(0, count)
    return PathEnsemble(values=values, n=n, process_tag=process_tag, kind=kind,
                        master_seed=master_seed, params=p, quad=q)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def ensemble_to_csv(ens: PathEnsemble, path: str | Path) -> None:
    """Long-format CSV: header path_id,m,t,value; one row per path per grid time."""
    n = ens.n
    with open(path, "w") as fh:
        fh.write("path_id,m,t,value\n")
        for k in range(ens.count):
            row = ens.values[k]
            for m in range(n + 1):
                fh.write(f"{k},{m},{m / n!r},{float(row[m])!r}\n")


def ensemble_metadata(ens: PathEnsemble) -> dict:
    return {
        "H": None if ens.params is None else ens.params.H,
        "n": ens.n,
        "M": ens.count,
        "kind": ens.kind.value,
        "seed": ens.master_seed,
        "rel_tol": None if ens.quad is None else ens.quad.rel_tol,
        "process": ens.process_tag.value,
    }


def write_ensemble(ens: PathEnsemble, csv_path: str | Path) -> list[str]:
    """CSV plus its JSON metadata sidecar; returns the files written."""
    csv_path = Path(csv_path)
    ensemble_to_csv(ens, csv_path)
    meta_path = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(ensemble_metadata(ens), sort_keys=True, indent=2) + "\n")
    return [str(csv_path), str(meta_path)]
