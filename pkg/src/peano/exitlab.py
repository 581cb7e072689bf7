"""Monte Carlo estimators for the selection and exit statements.

Every estimator fans path indices out over an optional worker map; path i of
stage ``block`` always draws from the Philox stream keyed by
``(master_seed, block * 2**32 + i)``, and chunk results merge by integer
counters, so estimates are bit-identical for any worker count.

Barrier handling: the closed-form barrier and box scales are asymptotic and
exceed O(1) at desk-scale epsilon (delta_eps ~ 250 at eps = 1e-3).  Default
barriers are therefore clamped to 0.1 with a flag in the result; explicit
barriers are taken as given.  Exit detection is the first grid or event
point beyond the barrier -- jumps make sub-grid interpolation ill-posed --
and the overshoot is recorded.  Censoring at the horizon is always a third
outcome, never folded into a side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .dynamics import (ModelParams, PathSample, classify_terminal,
                       extremal_solution, flow, integrate_adaptive,
                       integrate_event)
from .noise import (NoiseDecomposition, StableLaw, decomposition_for,
                    inner_cutoff_for, levy_tail_mass,
                    sample_small_jump_increments)
from .scaling import ScalingBundle, transition_box

#: default barrier clamp (asymptotic scales are meaningless above this)
BARRIER_CLAMP = 0.1

#: escape cutoff: stop a path once the residual exit probability of its
#: remaining horizon is below this bound
ESCAPE_TAIL_TOL = 1e-4

#: paths per parallel task
CHUNK = 128

# stream blocks per estimator stage (offset by eps-grid index in sweeps)
BLOCK_SELECTION = 1 << 8
BLOCK_HALFLINE = 2 << 8
BLOCK_BOX = 3 << 8
BLOCK_RAMP = 4 << 8
BLOCK_TUBE = 5 << 8
BLOCK_MARTINGALE = 6 << 8
BLOCK_VCOMP = 7 << 8
BLOCK_SIMULATE = 8 << 8


@dataclass(frozen=True)
class EstimateWithCI:
    """A point estimate with binomial standard error and 95% normal CI."""

    point: float
    stderr: float
    ci_lo: float
    ci_hi: float
    n: int

    @classmethod
    def proportion(cls, successes: int, n: int) -> "EstimateWithCI":
        p = successes / n
        se = math.sqrt(p * (1.0 - p) / n)
        return cls(point=p, stderr=se, ci_lo=p - 1.96 * se, ci_hi=p + 1.96 * se, n=n)


@dataclass(frozen=True)
class ExitRecord:
    """Outcome of one simulated path of an exit experiment."""

    exit_time: float
    exit_side: str  # below | above | censored
    exit_value: float
    path_seed: int

    def __post_init__(self):
        if self.exit_side not in ("below", "above", "censored"):
            raise ValueError(f"bad exit_side {self.exit_side!r}")


def weibull_tail(z, x: float, beta: float, B: float, lam: float):
    """Tail P(flow(T1; x) >= z) for T1 ~ Exp(lam):

    exp(-(z^{1-beta} - x^{1-beta}) * lam / (B (1-beta)))
    """
    if lam <= 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    z = np.asarray(z, dtype=float)
    if np.any(z < x) or x < 0.0:
        raise ValueError("need z >= x >= 0")
    om = 1.0 - beta
    out = np.exp(-(z ** om - x ** om) * lam / (B * om))
    return float(out) if out.ndim == 0 else out


def optional_stopping_bound(r_plus: float, r_minus: float, eps_jump: float) -> float:
    """Upper bound (r- + j)/(r+ + r- + j) for P(up-exit before down-exit)
    of a martingale with upward jumps at the exit bounded by j."""
    if min(r_plus, r_minus, eps_jump) < 0.0:
        raise ValueError("arguments must be nonnegative")
    denom = r_plus + r_minus + eps_jump
    if denom == 0.0:
        raise ValueError("all-zero arguments leave the bound undefined")
    return (r_minus + eps_jump) / denom


def v_component(path: PathSample, noise_path) -> np.ndarray:
    """Drift component V = X - eps*L on the shared grid (pointwise)."""
    noise_path = np.asarray(noise_path, dtype=float)
    if noise_path.shape != path.values.shape:
        raise ValueError(
            f"grid mismatch: path has {path.values.shape}, noise {noise_path.shape}")
    return path.values - noise_path


# ---------------------------------------------------------------------------
# fan-out plumbing

def _fan_out(worker, common, N: int, map_fn) -> list:
    if N < 1:
        raise ValueError("need at least one path")
    tasks = [(common, start, min(start + CHUNK, N)) for start in range(0, N, CHUNK)]
    mapper = map if map_fn is None else map_fn
    return list(mapper(worker, tasks))


def _clamped_barrier(log_value: float) -> tuple[float, bool]:
    if log_value > math.log(BARRIER_CLAMP):
        return BARRIER_CLAMP, True
    return math.exp(log_value), False


# ---------------------------------------------------------------------------
# selection probability

@dataclass(frozen=True)
class SelectionResult:
    p_plus: EstimateWithCI
    p_minus: EstimateWithCI
    p_unclassified: EstimateWithCI
    flags: tuple[str, ...] = ()


def _selection_chunk(task):
    (p, horizon, floor, seed, block), start, stop = task
    counts = [0, 0, 0]
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        path = integrate_adaptive(p, 0.0, horizon, g, floor=floor, path_index=i)
        label = classify_terminal(path.terminal, horizon, p)
        counts[("plus", "minus", "unclassified").index(label)] += 1
    return tuple(counts)


def selection_floor(p: ModelParams) -> float:
    """Spatial resolution floor: 2/3 of the smaller transition boundary."""
    box = transition_box(p)
    return math.exp(box.log_Theta_min) / 1.5


def estimate_selection(p: ModelParams, horizon: float, N: int, master_seed: int,
                       *, floor: float | None = None, map_fn=None,
                       block: int = BLOCK_SELECTION) -> SelectionResult:
    """Terminal-branch proportions of N paths started at the origin.

    The three proportions use integer counts and sum to 1 exactly.
    """
    if N < 100:
        raise ValueError("selection estimates need N >= 100")
    if floor is None:
        floor = selection_floor(p)
    common = (p, horizon, floor, master_seed, block)
    parts = _fan_out(_selection_chunk, common, N, map_fn)
    plus = sum(c[0] for c in parts)
    minus = sum(c[1] for c in parts)
    unc = sum(c[2] for c in parts)
    return SelectionResult(p_plus=EstimateWithCI.proportion(plus, N),
                           p_minus=EstimateWithCI.proportion(minus, N),
                           p_unclassified=EstimateWithCI.proportion(unc, N))


# ---------------------------------------------------------------------------
# half-line exit

@dataclass(frozen=True)
class HalflineResult:
    p_exit: EstimateWithCI
    barrier: float
    records: tuple[ExitRecord, ...]
    flags: tuple[str, ...] = ()


def escape_cutoff(p: ModelParams, decomp: NoiseDecomposition, barrier: float,
                  horizon: float, tol: float = ESCAPE_TAIL_TOL) -> float:
    """Level above which the residual exit probability is below ``tol``.

    A later crossing needs one large jump below -(level - barrier)/eps (the
    drift only pushes up); the expected number of such jumps over the whole
    horizon is lambda * horizon * P(W < -(level - barrier)/(2 eps)), with the
    factor 2 as margin for the bounded remainder.
    """
    expected_jumps = decomp.lambda_eps * horizon
    level = 2.0 * decomp.threshold * p.epsilon * (expected_jumps / (2.0 * tol)) ** (1.0 / p.alpha)
    return barrier + level


def _halfline_chunk(task):
    (p, decomp, x0, m, barrier, cutoff, seed, block), start, stop = task
    records = []
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        path = integrate_event(p, decomp, x0, m, g,
                               stop=lambda t, x: x <= barrier,
                               escape=cutoff, path_index=i)
        x_end = path.terminal
        if x_end <= barrier:
            records.append(ExitRecord(exit_time=float(path.times[-1]),
                                      exit_side="below", exit_value=x_end,
                                      path_seed=i))
        else:
            records.append(ExitRecord(exit_time=m, exit_side="censored",
                                      exit_value=x_end, path_seed=i))
    return records


def estimate_halfline_exit(p: ModelParams, bundle: ScalingBundle, x0: float,
                           m: float, N: int, master_seed: int, *,
                           barrier: float | None = None, map_fn=None,
                           block: int = BLOCK_HALFLINE) -> HalflineResult:
    """P(first passage below the barrier happens by time m), from x0.

    The default barrier is the closed-form lower-barrier scale, clamped to
    0.1 (flagged).  Paths stop early once above the escape cutoff; the
    residual probability neglected that way is below ESCAPE_TAIL_TOL.
    """
    if N < 100:
        raise ValueError("exit estimates need N >= 100")
    flags = []
    if barrier is None:
        barrier, clamped = _clamped_barrier(bundle.plus.log_delta_eps)
        if clamped:
            flags.append("barrier_clamped")
    if barrier <= 0.0:
        raise ValueError(f"barrier must be positive, got {barrier}")
    if x0 < 3.0 * barrier:
        raise ValueError(f"need x0 >= 3 * barrier, got {x0} < {3.0 * barrier}")
    if p.epsilon == 0.0:
        x_end = flow(m, x0, p)
        exited = x_end <= barrier  # never: the drift pushes up from x0 > barrier
        rec = ExitRecord(exit_time=0.0 if exited else m,
                         exit_side="below" if exited else "censored",
                         exit_value=x_end, path_seed=0)
        return HalflineResult(p_exit=EstimateWithCI.proportion(N if exited else 0, N),
                              barrier=barrier, records=(rec,), flags=tuple(flags))
    decomp = decomposition_for(p.law, p.epsilon, bundle.plus.rho, horizon=m)
    cutoff = escape_cutoff(p, decomp, barrier, m)
    common = (p, decomp, x0, m, barrier, cutoff, master_seed, block)
    parts = _fan_out(_halfline_chunk, common, N, map_fn)
    records = tuple(r for part in parts for r in part)
    exits = sum(1 for r in records if r.exit_side == "below")
    return HalflineResult(p_exit=EstimateWithCI.proportion(exits, N),
                          barrier=barrier, records=records, flags=tuple(flags))


# ---------------------------------------------------------------------------
# box exit

@dataclass(frozen=True)
class BoxExitResult:
    p_above: EstimateWithCI
    p_censored: EstimateWithCI
    exit_time_quantiles: dict[float, float]
    records: tuple[ExitRecord, ...]
    flags: tuple[str, ...] = ()


def _box_chunk(task):
    (p, theta_minus, theta_plus, t_hat, floor, seed, block), start, stop = task
    records = []
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        path = integrate_adaptive(
            p, 0.0, t_hat, g, floor=floor, max_step=t_hat / 32.0,
            stop=lambda t, x: x >= theta_plus or x <= -theta_minus,
            path_index=i)
        x_end, t_end = path.terminal, float(path.times[-1])
        if x_end >= theta_plus:
            records.append(ExitRecord(t_end, "above", x_end, i))
        elif x_end <= -theta_minus:
            records.append(ExitRecord(t_end, "below", x_end, i))
        else:
            records.append(ExitRecord(t_hat, "censored", x_end, i))
    return records


def estimate_box_exit(p: ModelParams, box: tuple[float, float], t_hat: float,
                      N: int, master_seed: int, *, map_fn=None,
                      block: int = BLOCK_BOX) -> BoxExitResult:
    """Exit side and time of paths started at 0 from (-Theta-, Theta+).

    ``box`` is (Theta_minus, Theta_plus) as positive levels.  Exit-time
    quantiles treat censored paths as +inf.  The box scales sit far below
    the amplitude-decomposition threshold, so paths use the exact-increment
    adaptive scheme (the decomposition's Gaussian floor would erase exactly
    the jumps that drive box exit).
    """
    theta_minus, theta_plus = box
    if theta_minus <= 0.0 or theta_plus <= 0.0:
        raise ValueError("box levels must be positive")
    if t_hat <= 0.0:
        raise ValueError("t_hat must be positive")
    if N < 100:
        raise ValueError("exit estimates need N >= 100")
    floor = min(theta_minus, theta_plus) / 1.5
    common = (p, theta_minus, theta_plus, t_hat, floor, master_seed, block)
    parts = _fan_out(_box_chunk, common, N, map_fn)
    records = tuple(r for part in parts for r in part)
    above = sum(1 for r in records if r.exit_side == "above")
    cens = sum(1 for r in records if r.exit_side == "censored")
    times = np.array([r.exit_time if r.exit_side != "censored" else math.inf
                      for r in records])
    quantiles = {q: float(np.quantile(times, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    return BoxExitResult(p_above=EstimateWithCI.proportion(above, N),
                         p_censored=EstimateWithCI.proportion(cens, N),
                         exit_time_quantiles=quantiles, records=records)


# ---------------------------------------------------------------------------
# ramp escape

def _ramp_chunk(task):
    (p, psi0, psi1, s, floor, seed, block), start, stop = task
    held = 0
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        path = integrate_adaptive(p, psi0, s, g, floor=floor,
                                  max_step=s / 32.0,
                                  stop=lambda t, x: x >= psi1, path_index=i)
        if path.terminal < psi1:
            held += 1
    return held


def estimate_ramp_escape(p: ModelParams, ramp: tuple[float, float], s: float,
                         N: int, master_seed: int, *, map_fn=None,
                         block: int = BLOCK_RAMP) -> EstimateWithCI:
    """P(first passage above Psi1 takes longer than s), started at Psi0."""
    psi0, psi1 = ramp
    if not 0.0 < psi0 < psi1:
        raise ValueError(f"need 0 < Psi0 < Psi1, got {psi0}, {psi1}")
    if s <= 0.0:
        raise ValueError("s must be positive")
    if p.epsilon == 0.0:
        B, beta = p.side(True)
        om = 1.0 - beta
        t_cross = (psi1 ** om - psi0 ** om) / (B * om)
        return EstimateWithCI.proportion(N if t_cross > s else 0, N)
    if N < 100:
        raise ValueError("exit estimates need N >= 100")
    floor = psi0 / 2.0
    common = (p, psi0, psi1, s, floor, master_seed, block)
    parts = _fan_out(_ramp_chunk, common, N, map_fn)
    return EstimateWithCI.proportion(sum(parts), N)


# ---------------------------------------------------------------------------
# tube deviation from the extremal branch

def tube_radius(delta: float, Delta: float, beta: float) -> float:
    """delta^{beta(1-beta)/2} joined with Delta^{1-beta} (the larger wins)."""
    return max(delta ** (beta * (1.0 - beta) / 2.0), Delta ** (1.0 - beta))


def _tube_chunk(task):
    (p, x0, horizon, radius, floor, seed, block), start, stop = task
    exceed = 0
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        path = integrate_adaptive(p, x0, horizon, g, floor=floor,
                                  record=True, path_index=i)
        ref = extremal_solution(path.times, "+", p)
        if np.max(np.abs(path.values - ref)) > radius:
            exceed += 1
    return exceed


def tube_deviation(p: ModelParams, bundle: ScalingBundle | None, x0: float,
                   horizon: float, N: int, master_seed: int, *,
                   delta: float, Delta: float, radius: float | None = None,
                   map_fn=None, block: int = BLOCK_TUBE) -> EstimateWithCI:
    """P(sup_t |X_t - x+(t)| over the path grid exceeds the tube radius)."""
    if not 3.0 * delta <= x0 <= Delta:
        raise ValueError(f"need x0 in [3 delta, Delta], got {x0}")
    if radius is None:
        radius = tube_radius(delta, Delta, p.beta_plus)
    floor = max(delta, 1e-12)
    if p.epsilon == 0.0:
        path = integrate_adaptive(p, x0, horizon,
                                  np.random.default_rng(0), floor=floor, record=True)
        ref = extremal_solution(path.times, "+", p)
        dev = float(np.max(np.abs(path.values - ref)))
        return EstimateWithCI.proportion(N if dev > radius else 0, N)
    if N < 100:
        raise ValueError("exit estimates need N >= 100")
    common = (p, x0, horizon, radius, floor, master_seed, block)
    parts = _fan_out(_tube_chunk, common, N, map_fn)
    return EstimateWithCI.proportion(sum(parts), N)


# ---------------------------------------------------------------------------
# truncated-martingale interval exit (optional-stopping companion)

def _martingale_chunk(task):
    (alpha, c, cap, r_plus, r_minus, dt, horizon, seed, block), start, stop = task
    law = StableLaw(alpha, c)
    h = inner_cutoff_for(law, cap, horizon=horizon)
    decomp = NoiseDecomposition(rho=0.5, threshold=cap,
                                lambda_eps=levy_tail_mass(law, cap), inner_cutoff=h)
    n_steps = int(math.ceil(horizon / dt))
    up = down = cens = 0
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        x = 0.0
        exited = False
        taken = 0
        while taken < n_steps and not exited:
            batch = min(64, n_steps - taken)
            incs = sample_small_jump_increments(decomp, law, np.full(batch, dt), g)
            taken += batch
            for v in incs:
                x += v
                if x >= r_plus:
                    up += 1
                    exited = True
                    break
                if x <= -r_minus:
                    down += 1
                    exited = True
                    break
        if not exited:
            cens += 1
    return up, down, cens


@dataclass(frozen=True)
class MartingaleExitResult:
    p_up: EstimateWithCI
    censored: int
    jump_cap: float


def estimate_martingale_exit(alpha: float, r_plus: float, r_minus: float,
                             N: int, master_seed: int, *, c: float = 1.0,
                             jump_cap: float = 0.5, dt: float = 0.01,
                             horizon: float = 200.0, map_fn=None,
                             block: int = BLOCK_MARTINGALE) -> MartingaleExitResult:
    """Frequency of up-exit before down-exit for the jump-truncated,
    compensated noise; the optional-stopping bound must dominate it."""
    if min(r_plus, r_minus) <= 0.0:
        raise ValueError("exit levels must be positive")
    common = (alpha, c, jump_cap, r_plus, r_minus, dt, horizon, master_seed, block)
    parts = _fan_out(_martingale_chunk, common, N, map_fn)
    up = sum(x[0] for x in parts)
    cens = sum(x[2] for x in parts)
    return MartingaleExitResult(p_up=EstimateWithCI.proportion(up, N),
                                censored=cens, jump_cap=jump_cap)


# ---------------------------------------------------------------------------
# drift component exceedance inside the box

def _vcomp_chunk(task):
    (p, t_hat, level, n_steps, seed, block), start, stop = task
    from .noise import sample_stable_increment
    exceed = 0
    dt = t_hat / n_steps
    for i in range(start, stop):
        g = rngmod.path_stream(seed, block, i)
        incs = sample_stable_increment(p.law, dt, g, n_steps)
        x = 0.0
        noise = 0.0
        sup_v = 0.0
        for j in range(n_steps):
            x = flow(dt, x, p) + p.epsilon * incs[j]
            noise += p.epsilon * incs[j]
            v = x - noise
            if v > sup_v:
                sup_v = v
        if sup_v > level:
            exceed += 1
    return exceed


def estimate_v_exceedance(p: ModelParams, theta_plus: float, g_exponent: float,
                          t_hat: float, N: int, master_seed: int, *,
                          n_steps: int = 256, map_fn=None,
                          block: int = BLOCK_VCOMP) -> EstimateWithCI:
    """P(sup_{[0, t_hat]} (X - eps L)_+ > Theta+ * eps^g) on a fixed grid."""
    level = theta_plus * p.epsilon ** g_exponent
    common = (p, t_hat, level, n_steps, master_seed, block)
    parts = _fan_out(_vcomp_chunk, common, N, map_fn)
    return EstimateWithCI.proportion(sum(parts), N)
