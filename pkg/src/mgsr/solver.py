"""Multigrid V-cycle driver with per-iteration prolongation scheduling.

Each iteration smooths the fine grid, restricts the residual down a ladder
of coarser grids, relaxes the coarsest level, and prolongs the correction
back up with either spline interpolation or the windowed super-resolution
operator. The operator choice follows the N_GAN cadence until the
iterate-difference norm drops below S_thres, which latches the alternate
operator permanently.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import srmodel, transfer
from .grid import Grid, NormBounds, diff_norm
from .smoother import PoissonProblem, gauss_seidel, residual

__all__ = [
    "ConvergenceLog",
    "IterationRecord",
    "RunConfig",
    "gs_only_iterations",
    "level_sides",
    "schedule_operator",
    "solve",
    "v_cycle",
]

LOG_COLUMNS = ("iter", "diff_norm", "residual_norm", "operator", "switch_latched", "wall_ms")
MODES = ("spline", "sr", "hybrid")


@dataclass(frozen=True)
class RunConfig:
    """Solver parameters; JSON config keys use exactly these field names."""

    N_iter: int = 300
    N_grid: int | None = None
    r_min: int = 12
    N_smooth_pre: int = 10
    N_smooth: int = 20
    N_step: int = 4
    N_GAN: float = 1.0
    S_thres: float = 1e-10
    tol: float = 1e-10
    mode: str = "spline"
    weights: str | None = None
    p_min: float = 1e-10
    p_max: float = 1e-3
    seed: int = 0
    coarse_sweeps: int = 10

    def __post_init__(self):
        if self.N_iter < 1:
            raise ValueError(f"N_iter must be >= 1, got {self.N_iter}")
        if self.r_min < 2 or self.r_min % 2 != 0:
            raise ValueError(f"r_min must be an even integer >= 2, got {self.r_min}")
        if self.N_smooth_pre < 0 or self.N_smooth < 1 or self.coarse_sweeps < 1:
            raise ValueError("sweep counts must be positive")
        if self.N_step < 1:
            raise ValueError(f"N_step must be >= 1, got {self.N_step}")
        if self.N_GAN <= 0.0:
            raise ValueError(f"N_GAN must be > 0, got {self.N_GAN}")
        if self.tol <= 0.0 or self.S_thres < 0.0:
            raise ValueError("tol must be > 0 and S_thres >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0.0 < self.p_min < self.p_max):
            raise ValueError("need 0 < p_min < p_max")
        if self.N_grid is not None:
            level_sides(self.N_grid, self.N_step, self.r_min)

    @property
    def bounds(self) -> NormBounds:
        return NormBounds(p_min=self.p_min, p_max=self.p_max)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        payload = json.loads(text)
        if not isinstance(payload, dict):
            raise ValueError("config JSON must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**payload)

    def to_json(self) -> str:
        return json.dumps(
            {f.name: getattr(self, f.name) for f in fields(self)}, indent=2
        )


def level_sides(n: int, n_step: int, r_min: int) -> list[int]:
    """Grid sides of the multigrid ladder, fine to coarse.

    Each level shrinks by 2**n_step, clamped at r_min; the ladder therefore
    requires n = r_min * 2**m for some m >= 1 so every ratio is a power of
    two and the coarsest side is exactly r_min.
    """
    if n <= r_min:
        raise ValueError(f"fine side {n} must exceed r_min {r_min}")
    sides = [n]
    while sides[-1] > r_min:
        nxt = max(r_min, sides[-1] // 2**n_step)
        ratio = sides[-1] / nxt
        if nxt * int(ratio) != sides[-1] or int(ratio) not in transfer.PROLONG_RATIOS:
            raise ValueError(
                f"no valid ladder from {n} to r_min {r_min} with step 2^{n_step}: "
                f"level {sides[-1]} -> {nxt} has unsupported ratio"
            )
        sides.append(nxt)
    return sides


def schedule_operator(iteration: int, n_gan: float, switch_latched: bool) -> str:
    """Prolongation operator for a 1-based iteration under the N_GAN cadence.

    N_GAN >= 1 runs the SR operator with a spline iteration every
    round(N_GAN)-th cycle; N_GAN < 1 runs spline with an SR iteration every
    round(1/N_GAN)-th cycle; N_GAN == 1 alternates starting with SR on odd
    iterations. Once latched, the second operator is returned forever.
    """
    if iteration < 1:
        raise ValueError(f"iteration must be >= 1, got {iteration}")
    if n_gan <= 0.0:
        raise ValueError(f"N_GAN must be > 0, got {n_gan}")
    if n_gan < 1.0:
        cadence = max(1, round(1.0 / n_gan))
        first, second = "spline", "sr"
    else:
        cadence = max(1, round(n_gan))
        first, second = "sr", "spline"
    if switch_latched:
        return second
    if n_gan == 1.0:
        return "sr" if iteration % 2 == 1 else "spline"
    return first if iteration % cadence != 0 else second


def _prolong(delta: Grid, s: int, operator: str, cfg: RunConfig,
             weights: srmodel.GeneratorWeights | None) -> Grid:
    if operator == "spline":
        return transfer.spline_prolong(delta, s)
    if operator == "sr":
        if weights is None:
            raise ValueError("SR prolongation requires generator weights")
        return srmodel.sr_prolong(delta, weights, cfg.bounds, s)
    raise ValueError(f"unknown operator {operator!r}")


def v_cycle(
    p: Grid,
    prob: PoissonProblem,
    cfg: RunConfig,
    operator: str,
    weights: srmodel.GeneratorWeights | None = None,
) -> Grid:
    """One V-cycle: smooth, restrict the residual down the ladder, relax the
    coarsest level, prolong the corrections back up with ``operator``, and
    return the mean-subtracted update of ``p``.

    The restricted residual is halved (half-injection). After a red-black
    sweep the color updated last has identically zero residual, so the whole
    residual concentrates at double density on the other color — the one the
    coarse nodes sit on. Sampling those nodes without the factor 1/2 doubles
    the coarse right-hand side and the resulting correction overshoots,
    leaving the cycle non-convergent for the smoothest error modes.
    """
    sides = level_sides(prob.n, cfg.N_step, cfg.r_min)

    def restricted(r: Grid, s: int) -> Grid:
        return Grid(0.5 * transfer.restrict(r, s).data)

    def correction(rhs: Grid, level: int) -> Grid:
        sub = PoissonProblem(f=rhs)
        if level == len(sides) - 1:
            return gauss_seidel(Grid.zeros(rhs.n), sub, cfg.coarse_sweeps)
        delta = gauss_seidel(Grid.zeros(rhs.n), sub, cfg.N_smooth)
        r = residual(delta, sub)
        s = sides[level] // sides[level + 1]
        coarse = correction(restricted(r, s), level + 1)
        up = _prolong(coarse, s, operator, cfg, weights)
        return Grid(delta.data + up.data)

    smoothed = gauss_seidel(p, prob, cfg.N_smooth)
    r = residual(smoothed, prob)
    s0 = sides[0] // sides[1]
    delta = correction(restricted(r, s0), 1)
    out = smoothed.data + _prolong(delta, s0, operator, cfg, weights).data
    return Grid(out - out.mean())


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    diff_norm: float
    residual_norm: float
    operator: str
    switch_latched: bool
    wall_ms: float


@dataclass
class ConvergenceLog:
    """Per-iteration solver history with CSV round-tripping."""

    records: list[IterationRecord] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_diff(self) -> float:
        return self.records[-1].diff_norm if self.records else float("nan")

    def converged(self, tol: float) -> bool:
        return bool(self.records) and self.final_diff < tol

    def iterations_to(self, threshold: float) -> int | None:
        """First iteration whose diff norm drops below ``threshold``."""
        for rec in self.records:
            if rec.diff_norm < threshold:
                return rec.iteration
        return None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for r in self.records:
                writer.writerow(
                    [
                        r.iteration,
                        f"{r.diff_norm:.17e}",
                        f"{r.residual_norm:.17e}",
                        r.operator,
                        int(r.switch_latched),
                        f"{r.wall_ms:.3f}",
                    ]
                )

    @classmethod
    def read_csv(cls, path) -> "ConvergenceLog":
        log = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != LOG_COLUMNS:
                raise ValueError(f"unexpected log header {header}")
            for row in reader:
                log.records.append(
                    IterationRecord(
                        iteration=int(row[0]),
                        diff_norm=float(row[1]),
                        residual_norm=float(row[2]),
                        operator=row[3],
                        switch_latched=bool(int(row[4])),
                        wall_ms=float(row[5]),
                    )
                )
        return log


def _check_problem(prob: PoissonProblem, cfg: RunConfig) -> RunConfig:
    if cfg.N_grid is not None and cfg.N_grid != prob.n:
        raise ValueError(f"config N_grid {cfg.N_grid} != problem side {prob.n}")
    cfg = replace(cfg, N_grid=prob.n)
    level_sides(prob.n, cfg.N_step, cfg.r_min)
    return cfg


def solve(
    prob: PoissonProblem,
    cfg: RunConfig,
    weights: srmodel.GeneratorWeights | None = None,
) -> tuple[Grid, ConvergenceLog]:
    """Iterate V-cycles until the RMS iterate difference drops below tol.

    The initial iterate is seeded uniform noise in [-p_max, p_max],
    mean-subtracted and pre-smoothed with N_smooth_pre sweeps. Stops at
    diff_norm < tol or after N_iter iterations; running out of iterations is
    reported through the log, not as an error.
    """
    cfg = _check_problem(prob, cfg)
    if cfg.mode in ("sr", "hybrid") and weights is None:
        if cfg.weights is None:
            raise ValueError(f"mode {cfg.mode!r} requires generator weights")
        weights = srmodel.load_weights(cfg.weights)

    rng = np.random.default_rng(cfg.seed)
    start = rng.uniform(-cfg.p_max, cfg.p_max, size=(prob.n, prob.n))
    p = Grid(start - start.mean())
    p = gauss_seidel(p, prob, cfg.N_smooth_pre)

    log = ConvergenceLog()
    latched = False
    for it in range(1, cfg.N_iter + 1):
        t0 = time.perf_counter()
        if cfg.mode == "hybrid":
            op = schedule_operator(it, cfg.N_GAN, latched)
        else:
            op = cfg.mode
        new_p = v_cycle(p, prob, cfg, op, weights)
        d = diff_norm(new_p, p)
        r_rms = residual(new_p, prob).rms()
        wall = (time.perf_counter() - t0) * 1e3
        log.records.append(
            IterationRecord(
                iteration=it,
                diff_norm=d,
                residual_norm=r_rms,
                operator=op,
                switch_latched=latched,
                wall_ms=wall,
            )
        )
        if not latched and d <= cfg.S_thres:
            latched = True
        p = new_p
        if d < cfg.tol:
            break
    return p, log


def gs_only_iterations(
    prob: PoissonProblem,
    threshold: float,
    max_sweeps: int,
    cfg: RunConfig | None = None,
) -> tuple[int | None, Grid]:
    """Plain Gauss-Seidel baseline: sweeps until the per-sweep iterate
    difference drops below ``threshold``. Returns (sweep count or None if the
    budget ran out, final iterate). Uses the same seeded start as solve()."""
    cfg = cfg or RunConfig()
    rng = np.random.default_rng(cfg.seed)
    start = rng.uniform(-cfg.p_max, cfg.p_max, size=(prob.n, prob.n))
    p = Grid(start - start.mean())
    p = gauss_seidel(p, prob, cfg.N_smooth_pre)
    for sweep in range(1, max_sweeps + 1):
        new_p = gauss_seidel(p, prob, 1)
        d = diff_norm(new_p, p)
        p = new_p
        if d < threshold:
            return sweep, p
    return None, p
