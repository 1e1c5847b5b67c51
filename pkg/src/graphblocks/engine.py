"""Random layer generation and ensemble time evolution.

Each circuit layer places r = round(alpha * floor(N/n)) nonoverlapping
width-n windows uniformly at random. Sampling is exactly uniform over
valid placements via the gap bijection (choose r points on a reduced
ring/line of N - r(n-1) sites and re-inflate), so it is translation
symmetric under periodic boundaries and cannot stall at alpha = 1.

Realization streams derive deterministically from (master_seed, index);
ensemble averages are integer sums divided once at the end, so results
are bit-identical for any worker count or execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from typing import Iterable

import numpy as np

from .graphs import GraphSpec
from .pauli import PauliString
from .stabilizer import StabilizerTableau, block_sites

LN2 = math.log(2.0)

_CALIBRATION_STREAM = 2
_REALIZATION_STREAM = 1
_CALIBRATION_RUNS = 4
_PLATEAU_WINDOW = 30          # layers without a new entropy maximum
_PLATEAU_EXTRA = 20           # layers recorded past detected saturation
_FRONT_TARGET = 0.45          # calibration front distance, fraction of N
_FRONT_MARGIN = 1.25


class PhysicsViolationError(RuntimeError):
    """A hard physical invariant (e.g. the strict light cone) was breached."""


@dataclass(frozen=True)
class EnsembleConfig:
    """Full specification of one circuit ensemble."""

    block: GraphSpec
    chain_length: int = 200
    sparsity: float = 0.5
    boundary: str = "periodic"
    layers: int | None = None          # None: calibrate automatically
    otoc_layers: int | None = None
    realizations: int = 200
    master_seed: int = 0
    log_base: int | str = 2
    otoc_site: int | None = None       # default ceil(N/2)
    otoc_initial: str = "X"
    otoc_probe: str = "Y"

    def __post_init__(self):
        n, N = self.block.n_vertices, self.chain_length
        if N < 2 or n > N:
            raise ValueError(f"chain of {N} sites cannot hold width-{n} blocks")
        if not 0.0 < self.sparsity <= 1.0:
            raise ValueError(f"sparsity must be in (0, 1], got {self.sparsity}")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if self.blocks_per_layer < 1:
            raise ValueError(
                f"sparsity {self.sparsity} places no blocks (r = 0) on N={N}, n={n}")
        if self.log_base not in (2, "e"):
            raise ValueError(f"log_base must be 2 or 'e', got {self.log_base!r}")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.otoc_probe not in ("X", "Y", "Z") or self.otoc_initial not in ("X", "Y", "Z"):
            raise ValueError("OTOC operators must be Pauli letters X, Y or Z")

    @property
    def max_blocks(self) -> int:
        return self.chain_length // self.block.n_vertices

    @property
    def blocks_per_layer(self) -> int:
        # round-half-even keeps alpha = 1/2 exact for even max_blocks
        return round(self.sparsity * self.max_blocks)

    @property
    def otoc_origin(self) -> int:
        return self.otoc_site if self.otoc_site is not None else (self.chain_length + 1) // 2

    @property
    def half_region(self) -> tuple[int, int]:
        return 1, self.chain_length // 2

    def realization_rng(self, index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed,
                                     spawn_key=(_REALIZATION_STREAM, index))
        return np.random.Generator(np.random.PCG64(seq))

    def calibration_rng(self, index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed,
                                     spawn_key=(_CALIBRATION_STREAM, index))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class LayerPlacement:
    """Starts of the pairwise disjoint width-n windows of one layer."""

    starts: tuple[int, ...]


def sample_layer(cfg: EnsembleConfig, rng: np.random.Generator) -> LayerPlacement:
    """Uniformly random set of r disjoint width-n windows.

    Gap bijection: with M = N - r(n-1), an r-subset of 0..M-1 plus (on
    the ring) a uniform global shift inflates to a valid placement; each
    placement has the same number of preimages, so the draw is exactly
    uniform over valid configurations.
    """
    n, N, r = cfg.block.n_vertices, cfg.chain_length, cfg.blocks_per_layer
    m = N - r * (n - 1)
    if m < r:
        raise ValueError(f"cannot place {r} disjoint width-{n} windows on {N} sites")
    points = np.sort(rng.choice(m, size=r, replace=False))
    offsets = points + np.arange(r) * (n - 1)
    if cfg.boundary == "periodic":
        shift = int(rng.integers(N))
        starts = (offsets + shift) % N
    else:
        starts = offsets
    return LayerPlacement(starts=tuple(int(s) + 1 for s in starts))


def evolve_state(cfg: EnsembleConfig, state: StabilizerTableau,
                 layer: LayerPlacement) -> StabilizerTableau:
    """Apply every block of the layer; windows are disjoint, so order
    cannot matter."""
    for start in layer.starts:
        state.apply_block(cfg.block, start, cfg.boundary)
    return state


def conjugate_by_layer(cfg: EnsembleConfig, w: PauliString,
                       layer: LayerPlacement) -> PauliString:
    for start in layer.starts:
        w.conjugate_block(cfg.block, start, cfg.boundary)
    return w


def _straddle_bonds(cfg: EnsembleConfig) -> tuple[int, ...]:
    """Bonds (b, b+1) at the half-region boundary; entropy can only move
    when a window covers both sides of one of them."""
    N = cfg.chain_length
    ell = N // 2
    if cfg.boundary == "periodic":
        return (ell, N)
    return (ell,)


def _layer_straddles(layer: LayerPlacement, bonds: tuple[int, ...],
                     n: int, N: int) -> bool:
    for b in bonds:
        for s in layer.starts:
            if (b - s) % N < n - 1:
                return True
    return False


def run_entropy_realization(cfg: EnsembleConfig, rng: np.random.Generator,
                            layers: int) -> np.ndarray:
    """Half-chain entropy in bits after each layer, S[0] = 0."""
    N = cfg.chain_length
    start, length = cfg.half_region
    state = StabilizerTableau.zero_state(N)
    bonds = _straddle_bonds(cfg)
    n = cfg.block.n_vertices
    series = np.zeros(layers + 1, dtype=np.int64)
    current = 0
    for t in range(1, layers + 1):
        layer = sample_layer(cfg, rng)
        evolve_state(cfg, state, layer)
        if _layer_straddles(layer, bonds, n, N):
            current = state.entropy_bits(start, length)
        series[t] = current
    return series


def _allowed_mask(origin: int, radius: int, N: int) -> int:
    if 2 * radius + 1 >= N:
        return (1 << N) - 1
    mask = 0
    for d in range(-radius, radius + 1):
        mask |= 1 << ((origin - 1 + d) % N)
    return mask


def run_otoc_realization(cfg: EnsembleConfig, rng: np.random.Generator,
                         layers: int, check_light_cone: bool = True) -> np.ndarray:
    """Binary OTOC field C(x, t) for one realization, shape (T+1, N).

    Entry (t, x-1) is 1 iff the Heisenberg-evolved operator anticommutes
    with the probe at site x. The placement stream is identical to the
    entropy realization fed from the same generator.
    """
    N = cfg.chain_length
    origin = cfg.otoc_origin
    w = PauliString.single(N, origin, cfg.otoc_initial)
    field = np.zeros((layers + 1, N), dtype=np.uint8)
    field[0] = _row_of_mask(_probe_conflict_mask(w, cfg.otoc_probe), N)
    step = cfg.block.n_vertices - 1
    for t in range(1, layers + 1):
        layer = sample_layer(cfg, rng)
        conjugate_by_layer(cfg, w, layer)
        if check_light_cone:
            allowed = _allowed_mask(origin, t * step, N)
            if w.support_mask() & ~allowed:
                raise PhysicsViolationError(
                    f"operator support escaped the light cone at layer {t}")
        field[t] = _row_of_mask(_probe_conflict_mask(w, cfg.otoc_probe), N)
    return field


def _probe_conflict_mask(w: PauliString, probe: str) -> int:
    """Sites where w anticommutes with the probe letter."""
    if probe == "Y":
        return w.x ^ w.z
    if probe == "Z":
        return w.x
    return w.z


def _row_of_mask(mask: int, N: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((N + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:N]


# -- calibration of layer counts --------------------------------------------

def calibrate_entropy_layers(cfg: EnsembleConfig) -> int:
    """Run a few dedicated-stream realizations until the running entropy
    maximum stagnates; the returned horizon leaves the trailing fifth of
    the recorded series inside the plateau."""
    N = cfg.chain_length
    cap = 60 * N
    saturation = 0
    for j in range(_CALIBRATION_RUNS):
        rng = cfg.calibration_rng(j)
        state = StabilizerTableau.zero_state(N)
        start, length = cfg.half_region
        bonds = _straddle_bonds(cfg)
        n = cfg.block.n_vertices
        best, best_t, t = 0, 0, 0
        current = 0
        while t < cap:
            t += 1
            layer = sample_layer(cfg, rng)
            evolve_state(cfg, state, layer)
            if _layer_straddles(layer, bonds, n, N):
                current = state.entropy_bits(start, length)
            if current > best:
                best, best_t = current, t
            elif t - best_t >= _PLATEAU_WINDOW:
                break
        saturation = max(saturation, best_t)
    total = int(math.ceil(1.3 * saturation)) + _PLATEAU_WINDOW + _PLATEAU_EXTRA
    return min(((total + 9) // 10) * 10, cap)


def calibrate_otoc_layers(cfg: EnsembleConfig) -> int:
    """Layers needed for the operator front to clear the fit window."""
    N = cfg.chain_length
    origin = cfg.otoc_origin
    target = int(math.ceil(_FRONT_TARGET * N))
    cap = 60 * N
    worst = 0
    for j in range(_CALIBRATION_RUNS):
        rng = cfg.calibration_rng(_CALIBRATION_RUNS + j)
        w = PauliString.single(N, origin, cfg.otoc_initial)
        t = 0
        while t < cap:
            t += 1
            layer = sample_layer(cfg, rng)
            conjugate_by_layer(cfg, w, layer)
            if _front_distance(w.support_mask(), origin, N) >= target:
                break
        worst = max(worst, t)
    total = int(math.ceil(_FRONT_MARGIN * worst)) + 10
    return min(((total + 9) // 10) * 10, cap)


def _front_distance(mask: int, origin: int, N: int) -> int:
    best = 0
    for q in range(N):
        if (mask >> q) & 1:
            d = abs(q + 1 - origin)
            best = max(best, min(d, N - d))
    return best


# -- ensemble ------------------------------------------------------------------

@dataclass
class RunResult:
    """Order-independent ensemble aggregate of one configuration."""

    config: EnsembleConfig
    entropy_layers: int
    otoc_layers: int
    entropy_sum: np.ndarray        # int64, (T_e + 1,)
    entropy_sumsq: np.ndarray      # int64, (T_e + 1,)
    otoc_counts: np.ndarray        # int64, (T_o + 1, N)

    @property
    def realizations(self) -> int:
        return self.config.realizations

    @property
    def entropy_mean(self) -> np.ndarray:
        """Averaged entropy series in the configured units."""
        scale = 1.0 if self.config.log_base == 2 else LN2
        return self.entropy_sum / self.realizations * scale

    @property
    def entropy_var(self) -> np.ndarray:
        """Unbiased per-layer variance across realizations (configured units)."""
        r = self.realizations
        if r < 2:
            return np.zeros_like(self.entropy_sum, dtype=float)
        num = self.entropy_sumsq - self.entropy_sum.astype(float) ** 2 / r
        scale = 1.0 if self.config.log_base == 2 else LN2 ** 2
        return num / (r - 1) * scale

    @property
    def otoc_mean(self) -> np.ndarray:
        return self.otoc_counts / self.realizations


def _entropy_worker(args) -> tuple[np.ndarray, np.ndarray]:
    cfg, indices, layers = args
    s = np.zeros(layers + 1, dtype=np.int64)
    s2 = np.zeros(layers + 1, dtype=np.int64)
    for i in indices:
        series = run_entropy_realization(cfg, cfg.realization_rng(i), layers)
        s += series
        s2 += series * series
    return s, s2


def _otoc_worker(args) -> np.ndarray:
    cfg, indices, layers = args
    counts = np.zeros((layers + 1, cfg.chain_length), dtype=np.int64)
    for i in indices:
        counts += run_otoc_realization(cfg, cfg.realization_rng(i), layers)
    return counts


def _chunks(total: int, pieces: int) -> list[range]:
    pieces = max(1, min(pieces, total))
    bounds = np.linspace(0, total, pieces + 1, dtype=int)
    return [range(bounds[k], bounds[k + 1]) for k in range(pieces)
            if bounds[k] < bounds[k + 1]]


def run_ensemble(cfg: EnsembleConfig, jobs: int = 1) -> RunResult:
    """Average entropy and OTOC diagnostics over cfg.realizations circuits.

    The two diagnostics run as separate passes consuming identical
    placement streams. Aggregation is integer summation, so the result
    does not depend on ``jobs``.
    """
    t_entropy = cfg.layers if cfg.layers is not None else calibrate_entropy_layers(cfg)
    t_otoc = cfg.otoc_layers if cfg.otoc_layers is not None else calibrate_otoc_layers(cfg)
    r = cfg.realizations
    entropy_tasks = [(cfg, list(ch), t_entropy) for ch in _chunks(r, jobs * 4)]
    otoc_tasks = [(cfg, list(ch), t_otoc) for ch in _chunks(r, jobs * 4)]
    if jobs > 1:
        with get_context("fork").Pool(processes=jobs) as pool:
            entropy_parts = pool.map(_entropy_worker, entropy_tasks)
            otoc_parts = pool.map(_otoc_worker, otoc_tasks)
    else:
        entropy_parts = [_entropy_worker(t) for t in entropy_tasks]
        otoc_parts = [_otoc_worker(t) for t in otoc_tasks]
    s = np.zeros(t_entropy + 1, dtype=np.int64)
    s2 = np.zeros(t_entropy + 1, dtype=np.int64)
    for a, b in entropy_parts:
        s += a
        s2 += b
    counts = np.zeros((t_otoc + 1, cfg.chain_length), dtype=np.int64)
    for c in otoc_parts:
        counts += c
    return RunResult(config=cfg, entropy_layers=t_entropy, otoc_layers=t_otoc,
                     entropy_sum=s, entropy_sumsq=s2, otoc_counts=counts)
