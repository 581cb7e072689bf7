"""Every epsilon-dependent scale of the exit analysis, evaluated in log-space.

The quantities below (threshold exponents, barrier and escape scales, the
space-time transition box, Laplace-bound terms) reach their asymptotic
regime only at extreme epsilon: the lower barrier
delta_eps = eps^{1-rho(1+alpha)} |ln eps|^4 first drops below 1 around
eps ~ 1e-40 for alpha = 1, rho = 0.4.  Direct evaluation would overflow long
before that, so everything is carried as a log-value; plain values are
exposed for display only.

Side conventions: the half-line analysis lives on the positive side with
(B+, beta+), so the bundle computes a full (Gamma, rho, delta, r, n, gamma)
set per side and aliases the top-level names to the '+' side.  The escape
ramp is computed for the side with the smaller drift exponent, which is the
side whose transition boundary is the smaller of the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gamma as _gamma_fn

from .dynamics import ModelParams

#: switch point of the polylogarithm evaluation near x = 1
_POLYLOG_NEAR_ONE = 1.0 - 1e-4

#: free constant of the ramp threshold exponent, any value in (0, 1/alpha)
#: satisfies the strict inequality it must; fixed to 1/(2 alpha)
RAMP_GAMMA_FACTOR = 0.5


# ---------------------------------------------------------------------------
# polylogarithm

def _polylog_series(a: float, x: float) -> float:
    """Direct series sum_{k>=1} x^k / k^a with a geometric remainder bound."""
    total = 0.0
    k0 = 1
    chunk = 512
    # terms grow until k ~ |a|/|ln x| when a < 0; sum past that point
    k_turn = int(abs(a) / -math.log(x)) + 1 if a < 0 else 1
    logx = math.log(x)
    while True:
        ks = np.arange(k0, k0 + chunk, dtype=float)
        terms = np.exp(ks * logx - a * np.log(ks))
        total += float(terms.sum())
        k0 += chunk
        if k0 > k_turn:
            # ratio of consecutive terms <= x * (1 + 1/k)^{-a} <= sqrt-ish bound
            ratio = x * (1.0 + 1.0 / k0) ** max(-a, 0.0)
            if ratio < 1.0:
                tail = terms[-1] * ratio / (1.0 - ratio)
                if tail <= 1e-14 * total + 1e-300:
                    return total
        if k0 > 10_000_000:
            raise RuntimeError("polylog series failed to converge")


def _polylog_near_one(a: float, x: float) -> float:
    """Series 25.12.11 of the NIST handbook, valid for non-integer a:

    Li_a(x) = Gamma(1-a) (ln(1/x))^{a-1} + sum_{n>=0} zeta(a-n) (ln x)^n / n!
    """
    lx = math.log(x)
    total = _gamma_fn(1.0 - a) * (-lx) ** (a - 1.0)
    term = 1.0
    for n in range(0, 40):
        if n > 0:
            term *= lx / n
        piece = float(mpmath.zeta(a - n)) * term
        total += piece
        if n > 2 and abs(piece) <= 1e-16 * abs(total):
            break
    return total


def polylog(a: float, x: float) -> float:
    """Li_a(x) = sum x^k / k^a for 0 <= x < 1, relative error <= 1e-8.

    Direct series away from 1; the NIST 25.12 expansion past 1 - 1e-4, where
    the series would need ~1e5 terms per digit.
    """
    if not 0.0 <= x < 1.0:
        raise ValueError(f"polylog requires 0 <= x < 1, got {x}")
    if x == 0.0:
        return 0.0
    if x <= _POLYLOG_NEAR_ONE:
        return _polylog_series(a, x)
    if abs(a - round(a)) > 1e-12:
        return _polylog_near_one(a, x)
    n = int(round(a))
    if n == 1:
        return -math.log1p(-x)
    if n == 0:
        return x / (1.0 - x)
    if n >= 2:
        return _polylog_series(a, x)
    raise ValueError(f"polylog near x=1 unsupported for negative integer a={a}")


# ---------------------------------------------------------------------------
# parameter choices

def choose_gamma(beta: float) -> tuple[float, bool]:
    """Threshold-split exponent Gamma in (1, 1/(1-beta)).

    The closed-form choice
        Gamma = (1 + (1/(1-beta) + 2(1-beta)/(2(1-beta)-1))/2) / 2
    is singular at beta = 1/2 and leaves (1, 1/(1-beta)) for part of the
    range; the midpoint (1 + 1/(1-beta))/2 is substituted there and flagged.
    The constraint is load-bearing (the escape scale needs Gamma < 1/(1-beta));
    the particular value is not.
    """
    hi = 1.0 / (1.0 - beta)
    denom = 2.0 * (1.0 - beta) - 1.0
    if denom != 0.0:
        cand = 0.5 * (1.0 + 0.5 * (hi + 2.0 * (1.0 - beta) / denom))
        if 1.0 < cand < hi:
            return cand, False
    return 0.5 * (1.0 + hi), True


def rho_zero(alpha: float, beta: float, Gamma: float) -> float:
    """Lower admissibility bound on rho from the k^{1-alpha} sum (binding for alpha < 1)."""
    g = Gamma * (1.0 - alpha) * (1.0 - beta)
    return g / (g + alpha)


def rho_one(beta: float, Gamma: float) -> float:
    """Lower admissibility bound on rho from the k^{1-beta} sum."""
    g = (1.0 - 1.0 / Gamma) * (1.0 - beta)
    return g / (g + 1.0)


def choose_rho(alpha: float, beta: float, Gamma: float) -> float:
    """Midpoint of (rho_1, 1/(1+alpha)), inside every required window."""
    return 0.5 * (rho_one(beta, Gamma) + 1.0 / (1.0 + alpha))


# ---------------------------------------------------------------------------
# per-side scales

def log_delta_eps(epsilon: float, alpha: float, rho: float) -> float:
    """ln of eps^{1-rho(1+alpha)} |ln eps|^4 (the lower-barrier scale)."""
    le = math.log(epsilon)
    return (1.0 - rho * (1.0 + alpha)) * le + 4.0 * math.log(abs(le))


def log_r_eps(epsilon: float, alpha: float, rho: float) -> float:
    """ln of |ln eps|^2 / eps^{alpha rho} (the small-noise control horizon)."""
    le = math.log(epsilon)
    return 2.0 * math.log(abs(le)) - alpha * rho * le


def log_n_eps(epsilon: float, alpha: float, rho: float) -> float:
    """ln of |ln eps|^2 / eps^{alpha(1-rho)} (Laplace-sum truncation index)."""
    le = math.log(epsilon)
    return 2.0 * math.log(abs(le)) - alpha * (1.0 - rho) * le


@dataclass(frozen=True)
class SideScales:
    """The (Gamma, rho, lambda, delta, r, n, gamma) set of one half-line."""

    beta: float
    B: float
    Gamma: float
    gamma_is_fallback: bool
    rho: float
    rho0: float
    rho1: float
    lambda_eps: float
    log_lambda_eps: float
    log_delta_eps: float
    log_r_eps: float
    log_n_eps: float
    log_gamma_eps: float
    gamma_eps_degenerate: bool

    @property
    def delta_eps(self) -> float:
        return math.exp(self.log_delta_eps)

    @property
    def r_eps(self) -> float:
        return math.exp(self.log_r_eps)

    @property
    def n_eps(self) -> float:
        return math.exp(self.log_n_eps)

    @property
    def gamma_eps(self) -> float:
        return math.exp(self.log_gamma_eps)


def _side_scales(p: ModelParams, beta: float, B: float,
                 rho_override: float | None, gamma_override: float | None) -> SideScales:
    alpha, eps, c = p.alpha, p.epsilon, p.c
    if gamma_override is not None:
        Gamma, fallback = float(gamma_override), False
        if not 1.0 < Gamma < 1.0 / (1.0 - beta):
            raise ValueError(f"Gamma override {Gamma} outside (1, {1.0/(1.0-beta):.4f})")
    else:
        Gamma, fallback = choose_gamma(beta)
    r0 = rho_zero(alpha, beta, Gamma)
    r1 = rho_one(beta, Gamma)
    rho = float(rho_override) if rho_override is not None else choose_rho(alpha, beta, Gamma)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho {rho} outside (0, 1)")
    le = math.log(eps)
    loglam = math.log(2.0 * c / alpha) + alpha * rho * le
    ld = log_delta_eps(eps, alpha, rho)
    # escape scale gamma_eps = (lambda^{-1/Gamma} - (3 delta)^{1-beta})^{1/(1-beta)};
    # the difference goes negative at moderate eps, where only the dominant
    # term lambda^{-1/(Gamma(1-beta))} is meaningful
    a_log = -loglam / Gamma
    b_log = (1.0 - beta) * (math.log(3.0) + ld)
    if b_log < a_log:
        lg = (a_log + math.log1p(-math.exp(b_log - a_log))) / (1.0 - beta)
        degenerate = False
    else:
        lg = a_log / (1.0 - beta)
        degenerate = True
    return SideScales(beta=beta, B=B, Gamma=Gamma, gamma_is_fallback=fallback,
                      rho=rho, rho0=r0, rho1=r1,
                      lambda_eps=math.exp(loglam), log_lambda_eps=loglam,
                      log_delta_eps=ld,
                      log_r_eps=log_r_eps(eps, alpha, rho),
                      log_n_eps=log_n_eps(eps, alpha, rho),
                      log_gamma_eps=lg, gamma_eps_degenerate=degenerate)


# ---------------------------------------------------------------------------
# transition box

def default_vartheta(p: ModelParams) -> float:
    """(1 + (1-beta)/alpha)/2 for equal exponents, 1 otherwise."""
    if p.beta_plus == p.beta_minus:
        return 0.5 * (1.0 + (1.0 - p.beta_plus) / p.alpha)
    return 1.0


def _box_denominator(p: ModelParams, vartheta: float) -> float:
    """D = vt*alpha + beta* - 1 + beta*(vt*alpha + beta^o - 1)."""
    bs = max(p.beta_plus, p.beta_minus)
    bo = min(p.beta_plus, p.beta_minus)
    va = vartheta * p.alpha
    return va + bs - 1.0 + bs * (va + bo - 1.0)


@dataclass(frozen=True)
class TransitionBox:
    """Solution (Theta+, Theta-, t) of the noise/drift balance system."""

    vartheta: float
    log_Theta_plus: float
    log_Theta_minus: float
    log_t_eps: float

    @property
    def Theta_plus(self) -> float:
        return math.exp(self.log_Theta_plus)

    @property
    def Theta_minus(self) -> float:
        return math.exp(self.log_Theta_minus)

    @property
    def t_eps(self) -> float:
        return math.exp(self.log_t_eps)

    @property
    def log_Theta_min(self) -> float:
        return min(self.log_Theta_plus, self.log_Theta_minus)

    def residuals(self, p: ModelParams) -> tuple[float, float]:
        """Log-residuals of the two balance equations (0 = exact)."""
        vt = self.vartheta
        r1 = (math.log(p.B_plus) + vt * self.log_t_eps
              + p.beta_plus * self.log_Theta_plus - self.log_Theta_minus)
        r2 = (math.log(p.B_minus) + vt * self.log_t_eps
              + p.beta_minus * self.log_Theta_minus - self.log_Theta_plus)
        return r1, r2


def transition_box(p: ModelParams, vartheta: float | None = None) -> TransitionBox:
    """Solve  B+ t^vt Theta+^{beta+} = Theta-,  B- t^vt Theta-^{beta-} = Theta+,
    closed by matching the smaller boundary to the noise scale eps t^{1/alpha}.

    The first two equations hold exactly for the returned triple; the closure
    is asymptotic (the 1 + t^{1-vt} factor is dropped).
    """
    if p.epsilon <= 0.0:
        raise ValueError("transition box requires epsilon > 0")
    vt = default_vartheta(p) if vartheta is None else float(vartheta)
    if not 0.0 < vt <= 1.0:
        raise ValueError(f"vartheta must lie in (0, 1], got {vartheta}")
    bo = min(p.beta_plus, p.beta_minus)
    if vt * p.alpha + bo <= 1.0:
        raise ValueError(
            f"precondition vartheta*alpha + min(beta) > 1 failed: "
            f"{vt}*{p.alpha} + {bo} = {vt * p.alpha + bo}")
    q = 1.0 - p.beta_plus * p.beta_minus
    logKp = (math.log(p.B_minus) + p.beta_minus * math.log(p.B_plus)) / q
    logKm = (math.log(p.B_plus) + p.beta_plus * math.log(p.B_minus)) / q
    ep = vt * (1.0 + p.beta_minus) / q
    em = vt * (1.0 + p.beta_plus) / q
    # the smaller boundary has the larger t-exponent (t -> 0); ties break on K
    if em > ep or (em == ep and logKm <= logKp):
        logKmin, emin = logKm, em
    else:
        logKmin, emin = logKp, ep
    log_t = (math.log(p.epsilon) - logKmin) / (emin - 1.0 / p.alpha)
    return TransitionBox(vartheta=vt,
                         log_Theta_plus=logKp + ep * log_t,
                         log_Theta_minus=logKm + em * log_t,
                         log_t_eps=log_t)


def kappa_exponent(p: ModelParams, vartheta: float) -> float:
    """Jump-truncation exponent for the box-exit martingale argument:

    kappa = -((1 - b^o b^*) - vt^2 alpha (b^* - b^o)) / D(vt).
    """
    bs = max(p.beta_plus, p.beta_minus)
    bo = min(p.beta_plus, p.beta_minus)
    D = _box_denominator(p, vartheta)
    return -((1.0 - bo * bs) - vartheta ** 2 * p.alpha * (bs - bo)) / D


def kappa_window(p: ModelParams, vartheta: float) -> tuple[float, float]:
    """Admissible interval (lo, hi) for -kappa; empty iff beta+ = beta-."""
    bs = max(p.beta_plus, p.beta_minus)
    bo = min(p.beta_plus, p.beta_minus)
    D = _box_denominator(p, vartheta)
    return vartheta * p.alpha * (1.0 + bo) / D - 1.0, (1.0 - bo * bs) / D


def subcritical_drift_exponent(p: ModelParams) -> float:
    """Exponent g > 0 (for beta+ != beta-) bounding the drift component
    inside the box: g = alpha (b^* - b^o)(1 + b^*) / (2 D(1)).
    """
    bs = max(p.beta_plus, p.beta_minus)
    bo = min(p.beta_plus, p.beta_minus)
    return p.alpha * (bs - bo) * (1.0 + bs) / (2.0 * _box_denominator(p, 1.0))


# ---------------------------------------------------------------------------
# ramp (linearized escape) scales

@dataclass(frozen=True)
class RampParameters:
    """Start/target levels and escape-time scale of the linearized ramp."""

    side: str
    log_Psi0: float
    log_Psi1: float
    log_s_eps: float
    pi1: float

    @property
    def Psi0(self) -> float:
        return math.exp(self.log_Psi0)

    @property
    def Psi1(self) -> float:
        return math.exp(self.log_Psi1)

    @property
    def s_eps(self) -> float:
        return math.exp(self.log_s_eps)


def _ramp(p: ModelParams, log_Theta_min: float, scales: SideScales,
          side: str) -> RampParameters:
    B, beta = scales.B, scales.beta
    log_Psi1 = math.log(3.0) + 0.5 * scales.log_delta_eps
    log_s = math.log(2.0 / B) + 0.5 * (1.0 - beta) * log_Psi1
    ln_eps_Psi1 = log_Psi1 / math.log(p.epsilon)
    gamma_factor = RAMP_GAMMA_FACTOR / p.alpha
    pi1 = -0.5 * (1.0 - beta) * gamma_factor * ln_eps_Psi1
    return RampParameters(side=side, log_Psi0=log_Theta_min, log_Psi1=log_Psi1,
                          log_s_eps=log_s, pi1=pi1)


def ramp_parameters(p: ModelParams, bundle: "ScalingBundle",
                    side: str | None = None) -> RampParameters:
    """Psi0 = smaller box boundary, Psi1 = 3 sqrt(delta_eps),
    s_eps = (2/B) Psi1^{(1-beta)/2}, and the jump-threshold exponent pi1.

    The escape analysis runs on the side with the smaller drift exponent;
    pi1 < 0 requires Psi1 < 1, i.e. delta_eps < 1/9, which holds only in the
    deep asymptotic regime.
    """
    if side is None:
        side = bundle.ramp_side
    scales = bundle.plus if side == "+" else bundle.minus
    return _ramp(p, min(bundle.log_Theta_plus, bundle.log_Theta_minus),
                 scales, side)


# ---------------------------------------------------------------------------
# the bundle

@dataclass(frozen=True)
class ScalingBundle:
    """All eps-dependent scales for one (params, epsilon), log-space stored."""

    params: ModelParams
    epsilon: float
    theta_star: float
    plus: SideScales
    minus: SideScales
    log_Theta_plus: float
    log_Theta_minus: float
    log_t_eps: float
    kappa: float
    g: float
    ramp_side: str
    log_Psi0: float
    log_Psi1: float
    log_s_eps: float
    pi1: float
    flags: tuple[str, ...]

    # top-level names alias the positive half-line ('+' is the side the
    # half-line exit analysis works on)
    @property
    def Gamma(self) -> float:
        return self.plus.Gamma

    @property
    def rho(self) -> float:
        return self.plus.rho

    @property
    def rho0(self) -> float:
        return self.plus.rho0

    @property
    def rho1(self) -> float:
        return self.plus.rho1

    @property
    def lambda_eps(self) -> float:
        return self.plus.lambda_eps

    @property
    def log_delta_eps(self) -> float:
        return self.plus.log_delta_eps

    @property
    def log_r_eps(self) -> float:
        return self.plus.log_r_eps

    @property
    def log_n_eps(self) -> float:
        return self.plus.log_n_eps

    @property
    def log_gamma_eps(self) -> float:
        return self.plus.log_gamma_eps

    @property
    def Theta_plus(self) -> float:
        return math.exp(self.log_Theta_plus)

    @property
    def Theta_minus(self) -> float:
        return math.exp(self.log_Theta_minus)

    @property
    def t_eps(self) -> float:
        return math.exp(self.log_t_eps)

    def side(self, name: str) -> SideScales:
        return self.plus if name == "+" else self.minus

    def box(self) -> TransitionBox:
        return TransitionBox(vartheta=self.theta_star,
                             log_Theta_plus=self.log_Theta_plus,
                             log_Theta_minus=self.log_Theta_minus,
                             log_t_eps=self.log_t_eps)


def scaling_bundle(p: ModelParams, *, rho: float | None = None,
                   Gamma: float | None = None,
                   vartheta: float | None = None) -> ScalingBundle:
    """Assemble the bundle; ``rho``/``Gamma``/``vartheta`` pin the automatic
    choices for experiments (applied to both sides)."""
    if p.epsilon <= 0.0 or p.epsilon >= 1.0:
        raise ValueError(f"bundle requires epsilon in (0, 1), got {p.epsilon}")
    if min(p.B_plus, p.B_minus) <= 0.0:
        raise ValueError("bundle requires strictly positive drift weights")
    plus = _side_scales(p, p.beta_plus, p.B_plus, rho, Gamma)
    minus = _side_scales(p, p.beta_minus, p.B_minus, rho, Gamma)
    vt = default_vartheta(p) if vartheta is None else float(vartheta)
    box = transition_box(p, vt)
    kap = kappa_exponent(p, vt)
    g = subcritical_drift_exponent(p)
    flags = []
    for side_name, s in (("plus", plus), ("minus", minus)):
        if s.gamma_is_fallback:
            flags.append(f"Gamma_fallback_{side_name}")
        if s.gamma_eps_degenerate:
            flags.append(f"gamma_eps_asymptotic_{side_name}")
    if kap >= 0.0:
        flags.append("kappa_nonnegative")
    ramp_side = "+" if p.beta_plus <= p.beta_minus else "-"
    ramp = _ramp(p, box.log_Theta_min,
                 plus if ramp_side == "+" else minus, ramp_side)
    if ramp.pi1 >= 0.0:
        flags.append("pi1_nonnegative")
    return ScalingBundle(params=p, epsilon=p.epsilon, theta_star=vt,
                         plus=plus, minus=minus,
                         log_Theta_plus=box.log_Theta_plus,
                         log_Theta_minus=box.log_Theta_minus,
                         log_t_eps=box.log_t_eps,
                         kappa=kap, g=g, ramp_side=ramp_side,
                         log_Psi0=ramp.log_Psi0, log_Psi1=ramp.log_Psi1,
                         log_s_eps=ramp.log_s_eps, pi1=ramp.pi1,
                         flags=tuple(flags))


# ---------------------------------------------------------------------------
# exponent audit

@dataclass(frozen=True)
class AuditCheck:
    """One audited inequality: its name, numeric value, and verdict.

    ``vacuous`` marks checks whose defining analysis assumes beta+ != beta-
    and which therefore assert nothing in the symmetric case.
    """

    name: str
    ok: bool
    value: float
    vacuous: bool = False


@dataclass(frozen=True)
class AuditReport:
    vartheta: float
    checks: tuple[AuditCheck, ...]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def by_name(self, name: str) -> AuditCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def exponent_audit(p: ModelParams, vartheta: float, *, rho: float | None = None,
                   Gamma: float | None = None) -> AuditReport:
    """Positivity/ordering audit of every exponent the convergence proofs use.

    Per side: the sign expression (alpha-1)(1-rho) + rho*alpha/(Gamma(1-beta)),
    the window rho0 < rho < 1/(1+alpha), and rho1 < rho.  Box-level: the
    jump-truncation window is nonempty, the ramp start satisfies
    beta^o ln_eps(Psi0) - 1 < 0, and the drift-subcriticality exponent g is
    positive.  The last two box checks are vacuous for beta+ = beta-.
    """
    checks: list[AuditCheck] = []
    symmetric = p.beta_plus == p.beta_minus
    for name, beta, B in (("plus", p.beta_plus, p.B_plus),
                          ("minus", p.beta_minus, p.B_minus)):
        if Gamma is not None:
            G = float(Gamma)
        else:
            G, _ = choose_gamma(beta)
        r = float(rho) if rho is not None else choose_rho(p.alpha, beta, G)
        sign_val = (p.alpha - 1.0) * (1.0 - r) + r * p.alpha / (G * (1.0 - beta))
        checks.append(AuditCheck(f"sign_positive_{name}", sign_val > 0.0, sign_val))
        r0 = rho_zero(p.alpha, beta, G)
        upper = 1.0 / (1.0 + p.alpha)
        checks.append(AuditCheck(f"rho_window_{name}", r0 < r < upper, r))
        r1 = rho_one(beta, G)
        checks.append(AuditCheck(f"rho_above_rho1_{name}", r1 < r, r - r1))
    lo, hi = kappa_window(p, vartheta)
    width = hi - lo
    checks.append(AuditCheck("kappa_window_nonempty",
                             (width > 0.0) or symmetric, width, vacuous=symmetric))
    D = _box_denominator(p, vartheta)
    bs = max(p.beta_plus, p.beta_minus)
    bo = min(p.beta_plus, p.beta_minus)
    sec5 = (vartheta * p.alpha * bo * (1.0 + bs) - D) / D
    checks.append(AuditCheck("ramp_start_exponent_negative", sec5 < 0.0, sec5))
    g = subcritical_drift_exponent(p)
    checks.append(AuditCheck("drift_subcritical_exponent_positive",
                             (g > 0.0) or symmetric, g, vacuous=symmetric))
    return AuditReport(vartheta=vartheta, checks=tuple(checks))


# ---------------------------------------------------------------------------
# Laplace-bound terms

@dataclass(frozen=True)
class BoundTermsRow:
    """Dominant decay orders of the five Laplace-bound terms at one epsilon.

    Stored as log-values of pure powers eps^{e_i}; constants and logarithmic
    factors are dropped (only the decay orders are checkable -- with the log
    factors kept, several terms have turning points near eps ~ 1e-3..1e-6
    and no clean monotonicity statement survives at desk scale).
    """

    epsilon: float
    log_S1: float
    log_S2: float
    log_S3: float
    log_S4: float
    log_S5: float
    log_S: float


def bound_term_exponents(p: ModelParams, bundle: ScalingBundle) -> dict[str, float]:
    """The decay exponents e_i (positive iff the audited inequalities hold).

    Computed on the positive half-line with the bundle's (Gamma, rho).  The
    S3 block has four contributions; its fourth exponent is stated in the
    form whose positivity is exactly rho > rho_1.
    """
    a = p.alpha
    G = bundle.plus.Gamma
    r = bundle.plus.rho
    beta = p.beta_plus
    gb = G * (1.0 - beta)
    kappa3 = a * r * (1.0 + a * r / gb)
    return {
        "S1": 2.0 + a * (1.0 - r),
        "S2": 2.0 - a + a * r,
        "S3a": a * (1.0 - r) + a * a * r / gb,
        "S3b": a * r * (1.0 - 1.0 / G),
        "S3c": a * ((a - 1.0) * (1.0 - r) + r * a / gb),
        "S3d": a * (r - (1.0 - r) * (1.0 - 1.0 / G) * (1.0 - beta)),
        "S4": kappa3 * a * r,
        "S5": 2.0 + kappa3 * a * r - kappa3,
    }


def _logsumexp(vals) -> float:
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


def bound_terms(p: ModelParams, bundle: ScalingBundle,
                eps_grid) -> list[BoundTermsRow]:
    """Evaluate the bound terms on a decreasing epsilon grid in (0, 1)."""
    eps_grid = list(eps_grid)
    if any(not 0.0 < e < 1.0 for e in eps_grid):
        raise ValueError("eps_grid values must lie in (0, 1)")
    exps = bound_term_exponents(p, bundle)
    rows = []
    for eps in eps_grid:
        le = math.log(eps)
        s1 = exps["S1"] * le
        s2 = exps["S2"] * le
        s3 = _logsumexp([exps["S3a"] * le, exps["S3b"] * le,
                         exps["S3c"] * le, exps["S3d"] * le])
        s4 = exps["S4"] * le
        s5 = exps["S5"] * le
        rows.append(BoundTermsRow(epsilon=eps, log_S1=s1, log_S2=s2, log_S3=s3,
                                  log_S4=s4, log_S5=s5,
                                  log_S=_logsumexp([s1, s2, s3, s4, s5])))
    return rows
