"""Simulated-annealing feedback loop of the simulated machine.

Each iteration proposes a batch spin flip, re-evaluates the detected cost
(fresh noise every cycle when enabled) and accepts per Metropolis.  The
returned best configuration is always scored by the true, noiseless cut
value on the instance: the optimizer and the evaluator are kept separate.

Cost backends:

* ``closed_form``  -- O(n) quadrature powers from the DC readout.
* ``full_field``   -- synthesise the phase mask, propagate, read the
  detector plane.  Required for the image-distance objective.

Objectives (both minimised):

* ``hamiltonian``  -- P_x + s * P_y, an affine image of the instance
  Hamiltonian, so descending it maximises the cut.
* ``image_distance`` -- the L2 distance between the detected image and the
  unmodulated-aperture focus.  This is the machine's native feedback
  signal; note that on instances built from the encoding weights it pulls
  the DC power up, i.e. toward the opposite end of the cut spectrum, so it
  is provided for protocol studies rather than as the solving default.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import graphs, optics
from .graphs import CutReport, MaxCutInstance, Rank2Encoding, as_spin_config
from .noise import NoiseSpec, add_noise_array
from .optics import MacropixelLayout, OpticalGeometry

AUTO_BACKEND_THRESHOLD = 1024  # closed_form above this spin count


@dataclass(frozen=True)
class AnnealParams:
    iterations: int = 100
    restarts: int = 1
    initial_flip_fraction: float = 0.5
    final_flip_fraction: float | None = None  # None -> 1/n
    temperature_start: float | None = None  # None -> std of warmup costs
    cooling_rate: float = 0.95
    cost_backend: str = "auto"  # auto | full_field | closed_form
    objective: str = "hamiltonian"  # hamiltonian | image_distance
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not (0.0 < self.initial_flip_fraction <= 1.0):
            raise ValueError("initial_flip_fraction must lie in (0, 1]")
        if self.final_flip_fraction is not None:
            if not (0.0 < self.final_flip_fraction <= self.initial_flip_fraction):
                raise ValueError("need 0 < final_flip_fraction <= initial_flip_fraction")
        if not (0.0 < self.cooling_rate < 1.0):
            raise ValueError("cooling_rate must lie in (0, 1)")
        if self.cost_backend not in ("auto", "full_field", "closed_form"):
            raise ValueError(f"unknown cost backend {self.cost_backend!r}")
        if self.objective not in ("hamiltonian", "image_distance"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.temperature_start is not None and self.temperature_start <= 0:
            raise ValueError("temperature_start must be positive")

    def resolve_backend(self, n: int) -> str:
        if self.cost_backend != "auto":
            return self.cost_backend
        return "closed_form" if n > AUTO_BACKEND_THRESHOLD else "full_field"


@dataclass
class AnnealTrace:
    iteration: np.ndarray
    cost: np.ndarray
    hamiltonian: np.ndarray
    cut_value: np.ndarray
    temperature: np.ndarray
    flips_proposed: np.ndarray
    accepted: np.ndarray
    best_config: np.ndarray
    best_cut: float

    def running_best_cut(self) -> np.ndarray:
        return np.maximum.accumulate(self.cut_value)


def propose_batch_flip(config, flip_fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each spin independently with probability flip_fraction.

    If no spin flips, one uniformly chosen spin is forced to flip so the
    proposal always differs from the input.
    """
    x = as_spin_config(config)
    if not (0.0 < flip_fraction <= 1.0):
        raise ValueError("flip_fraction must lie in (0, 1]")
    mask = rng.random(x.size) < flip_fraction
    if not mask.any():
        mask[rng.integers(x.size)] = True
    out = x.copy()
    out[mask] = -out[mask]
    return out


def metropolis_accept(delta_cost: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept non-increasing moves always, increasing ones with exp(-delta/T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if delta_cost <= 0:
        return True
    return bool(rng.random() < math.exp(-delta_cost / temperature))


class _CostEvaluator:
    """Per-run cost function; owns the precomputed optics for its backend."""

    def __init__(self, enc: Rank2Encoding, layout: MacropixelLayout | None, params: AnnealParams):
        self.enc = enc
        self.backend = params.resolve_backend(enc.n)
        self.objective = params.objective
        self.level = params.noise.level
        self.sign = enc.sign
        if self.objective == "image_distance" and self.backend != "full_field":
            raise ValueError("image_distance objective requires the full_field backend")
        self.eps = enc.eps
        self.eta_eff = enc.eta_eff
        # matched-variance scale for scalar noise when no image is available
        self.power_scale = float(np.dot(self.eps, self.eps) + np.dot(self.eta_eff, self.eta_eff))
        if self.backend == "full_field":
            if layout is None:
                layout = optics.build_layout(enc.n, OpticalGeometry.square_for(enc.n))
            if layout.n != enc.n:
                raise ValueError("layout and encoding sizes differ")
            self.layout = layout
            self.pad = layout.geometry.pad_factor
            self.target = optics.target_image(layout) if self.objective == "image_distance" else None
        else:
            self.layout = None

    def __call__(self, x: np.ndarray, rng: np.random.Generator | None) -> float:
        if self.backend == "closed_form":
            xf = x.astype(np.float64)
            sx = float(np.dot(self.eps, xf))
            sy = float(np.dot(self.eta_eff, xf))
            px, py = sx * sx, sy * sy
            if self.level > 0 and rng is not None:
                nx, ny = rng.normal(0.0, math.sqrt(self.level), 2)
                px += nx * self.power_scale
                py += ny * self.power_scale
            return px + self.sign * py

        mask = optics.synthesize_mask(self.enc, x, self.layout)
        fieldarr = optics.propagate(mask, pad_factor=self.pad)
        if self.objective == "image_distance":
            image = optics.to_intensity(fieldarr)
            normed = image.values / image.values.max()
            if self.level > 0 and rng is not None:
                normed = add_noise_array(normed, self.level, rng)
            return float(np.linalg.norm(self.target.values - normed))

        c0, c1 = optics.center_index(fieldarr.shape)
        fc = fieldarr[c0, c1] / optics.CELL_NORM
        px, py = fc.real**2, fc.imag**2
        if self.level > 0 and rng is not None:
            # detector noise lives on the max-normalised image; rescale to
            # power units through the image peak
            peak = float(np.max(np.abs(fieldarr) ** 2)) / optics.CELL_NORM**2
            nx, ny = rng.normal(0.0, math.sqrt(self.level), 2)
            px += nx * peak
            py += ny * peak
        return px + self.sign * py


def cost_eval(enc: Rank2Encoding, config, layout: MacropixelLayout | None, params: AnnealParams) -> float:
    """One-shot cost evaluation; deterministic per params.noise.seed."""
    evaluator = _CostEvaluator(enc, layout, params)
    rng = np.random.default_rng(np.random.SeedSequence(params.noise.seed))
    return evaluator(as_spin_config(config), rng)


def _run_single(instance, enc, layout, params, restart_index):
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, restart_index]))
    evaluator = _CostEvaluator(enc, layout, params)
    n = enc.n
    p0 = params.initial_flip_fraction
    p1 = params.final_flip_fraction if params.final_flip_fraction is not None else min(p0, 1.0 / n)
    iters = params.iterations

    x = (rng.integers(0, 2, n, dtype=np.int8) * 2 - 1).astype(np.int8)
    cost_cur = evaluator(x, rng)
    if params.temperature_start is not None:
        temp = params.temperature_start
    else:
        warm = [evaluator(propose_batch_flip(x, p0, rng), rng) for _ in range(20)]
        temp = float(np.std(warm))
        if temp <= 0:
            temp = 1.0

    cut_cur, ham_cur = graphs.cut_and_hamiltonian(instance, x)
    best_cut, best_x = cut_cur, x.copy()

    trace = AnnealTrace(
        iteration=np.arange(iters, dtype=np.int64),
        cost=np.zeros(iters),
        hamiltonian=np.zeros(iters),
        cut_value=np.zeros(iters),
        temperature=np.zeros(iters),
        flips_proposed=np.zeros(iters, dtype=np.int64),
        accepted=np.zeros(iters, dtype=bool),
        best_config=best_x,
        best_cut=best_cut,
    )
    for t in range(iters):
        frac = p0 if iters == 1 else p0 * (p1 / p0) ** (t / (iters - 1))
        proposal = propose_batch_flip(x, frac, rng)
        flipped = int(np.count_nonzero(proposal != x))
        cost_new = evaluator(proposal, rng)
        accept = metropolis_accept(cost_new - cost_cur, temp, rng)
        if accept:
            x = proposal
            cost_cur = cost_new
            cut_cur, ham_cur = graphs.cut_and_hamiltonian(instance, x)
            if cut_cur > best_cut:
                best_cut, best_x = cut_cur, x.copy()
        trace.cost[t] = cost_cur
        trace.hamiltonian[t] = ham_cur
        trace.cut_value[t] = cut_cur
        trace.temperature[t] = temp
        trace.flips_proposed[t] = flipped
        trace.accepted[t] = accept
        temp *= params.cooling_rate
    trace.best_config = best_x
    trace.best_cut = best_cut
    return trace


def anneal(
    instance: MaxCutInstance,
    enc: Rank2Encoding,
    layout: MacropixelLayout | None = None,
    params: AnnealParams | None = None,
):
    """Run the feedback loop; returns (CutReport, AnnealTrace of the best restart).

    Restarts use disjoint child RNG streams keyed by restart index, so they
    can be reordered or distributed without changing the result; ties on
    best cut are broken by the lexicographically smallest configuration.
    """
    params = params if params is not None else AnnealParams()
    if enc.n != instance.n:
        raise ValueError("encoding and instance sizes differ")
    start = time.perf_counter()
    best_trace = None
    for r in range(params.restarts):
        trace = _run_single(instance, enc, layout, params, r)
        if best_trace is None or _better(trace, best_trace):
            best_trace = trace
    elapsed = time.perf_counter() - start
    report = CutReport(
        cut_value=best_trace.best_cut,
        hamiltonian=graphs.hamiltonian(instance, best_trace.best_config),
        config=best_trace.best_config,
        solver_id="euler-sim",
        wall_time_seconds=elapsed,
        seed=params.seed,
    )
    return report, best_trace


def _better(a: AnnealTrace, b: AnnealTrace) -> bool:
    if a.best_cut != b.best_cut:
        return a.best_cut > b.best_cut
    return a.best_config.tobytes() < b.best_config.tobytes()
