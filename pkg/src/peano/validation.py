"""Distributional oracle suite for the noise module.

Each check compares empirical sampling against an independent route to the
same quantity: the closed Cauchy CDF point at alpha = 1, exact tail ratios
of the restricted Levy measure, self-similarity in a two-sample KS test,
reassembly of the split process against direct increments, and the
characteristic function against the quadrature exponent.  Thresholds are
fixed here, not configurable: they are the acceptance contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import rng as rngmod
from .noise import (StableLaw, decomposition_for, levy_tail_mass,
                    sample_large_jump, sample_small_jump_increments,
                    sample_stable_increment)

BLOCK_VALIDATE = 9 << 8


@dataclass(frozen=True)
class OracleCheck:
    name: str
    value: float
    threshold: float
    ok: bool
    detail: str = ""


def _check(name, value, threshold, detail="") -> OracleCheck:
    return OracleCheck(name=name, value=value, threshold=threshold,
                       ok=value <= threshold, detail=detail)


def cauchy_point_check(master_seed: int, n: int = 1_000_000,
                       sigma_override: float | None = None) -> OracleCheck:
    """alpha = 1, c = 1 makes L_1 Cauchy of scale pi: P(L_1 <= pi) = 3/4."""
    law = StableLaw(1.0, 1.0, sigma=sigma_override)
    g = rngmod.path_stream(master_seed, BLOCK_VALIDATE, 0)
    x = sample_stable_increment(law, 1.0, g, n)
    err = abs(float(np.mean(x <= math.pi)) - 0.75)
    return _check("cauchy_point", err, 0.005, f"n={n}")


def tail_ratio_check(alpha: float, master_seed: int, n: int = 100_000,
                     threshold: float = 1.0) -> OracleCheck:
    """P(|W| > 2u) for jumps restricted outside [-u, u] equals 2^-alpha."""
    law = StableLaw(alpha)
    g = rngmod.path_stream(master_seed, BLOCK_VALIDATE, 1)
    w = sample_large_jump(law, threshold, g, n)
    expect = levy_tail_mass(law, 2.0 * threshold) / levy_tail_mass(law, threshold)
    err = abs(float(np.mean(np.abs(w) > 2.0 * threshold)) - expect)
    return _check("tail_ratio", err, 0.01, f"alpha={alpha}, expect={expect:.4f}")


def self_similarity_check(alpha: float, master_seed: int, n: int = 100_000,
                          a: float = 4.0,
                          sigma_override: float | None = None) -> OracleCheck:
    """Two-sample KS of L_a against a^{1/alpha} L_1."""
    law = StableLaw(alpha, sigma=sigma_override)
    g = rngmod.path_stream(master_seed, BLOCK_VALIDATE, 2)
    la = sample_stable_increment(law, a, g, n)
    l1 = a ** (1.0 / alpha) * sample_stable_increment(law, 1.0, g, n)
    d = float(stats.ks_2samp(la, l1).statistic)
    return _check("self_similarity", d, 0.01, f"alpha={alpha}, a={a}")


def reassembly_check(alpha: float, epsilon: float, master_seed: int,
                     n: int = 100_000, rho: float = 0.3,
                     sigma_override: float | None = None) -> OracleCheck:
    """Bounded remainder plus large jumps must recover the full increment law.

    Draws n unit-time remainder increments (one-step paths), adds the summed
    event stream over the same horizon via its Poisson count, and compares
    against direct increments in a two-sample KS test.
    """
    law = StableLaw(alpha, sigma=sigma_override)
    decomp = decomposition_for(law, epsilon, rho, horizon=1.0)
    g = rngmod.path_stream(master_seed, BLOCK_VALIDATE, 3)
    small = sample_small_jump_increments(decomp, law, np.ones(n), g)
    counts = g.poisson(decomp.lambda_eps, n)
    big = np.zeros(n)
    kmax = int(counts.max()) if n else 0
    for k in range(1, kmax + 1):
        idx = np.nonzero(counts >= k)[0]
        big[idx] += sample_large_jump(law, decomp.threshold, g, len(idx))
    direct = sample_stable_increment(law, 1.0, g, n)
    d = float(stats.ks_2samp(small + big, direct).statistic)
    return _check("levy_ito_reassembly", d, 0.01, f"alpha={alpha}, rho={rho}")


def char_function_check(alpha: float, master_seed: int, n: int = 100_000,
                        sigma_override: float | None = None) -> list[OracleCheck]:
    """|E cos(z L_1) - exp(psi(z))| <= 4/sqrt(n), psi from the law (quadrature
    validated at construction unless sigma is overridden)."""
    law = StableLaw(alpha, sigma=sigma_override)
    g = rngmod.path_stream(master_seed, BLOCK_VALIDATE, 4)
    x = sample_stable_increment(law, 1.0, g, n)
    # the oracle exponent always comes from (alpha, c), independent of any
    # sigma override under test
    clean = StableLaw(alpha, law.c)
    checks = []
    for z in (0.1, 0.5, 1.0, 2.0, 5.0):
        err = abs(float(np.mean(np.cos(z * x))) - math.exp(clean.psi(z)))
        checks.append(_check(f"char_function_z{z:g}", err, 4.0 / math.sqrt(n),
                             f"alpha={alpha}"))
    return checks


def symmetry_check(alpha: float, master_seed: int, n: int = 100_000) -> OracleCheck:
    law = StableLaw(alpha)
    g = rngmod.path_stream(master_seed, BLOCK_VALIDATE, 5)
    x = sample_stable_increment(law, 1.0, g, n)
    err = abs(float(np.mean(np.sign(x))))
    return _check("symmetry", err, 3.0 / math.sqrt(n), f"alpha={alpha}")


def rate_consistency_check(alpha: float, epsilon: float, rho: float) -> OracleCheck:
    """lambda_eps from the tail functional against (2c/alpha) eps^{alpha rho}."""
    law = StableLaw(alpha)
    lam = levy_tail_mass(law, epsilon ** -rho)
    expect = (2.0 * law.c / alpha) * epsilon ** (alpha * rho)
    rel = abs(lam / expect - 1.0)
    return _check("decomposition_rate", rel, 1e-12, f"alpha={alpha}, rho={rho}")


def run_suite(alpha: float, epsilon: float, master_seed: int, *,
              n_large: int = 1_000_000, n_med: int = 100_000,
              sigma_override: float | None = None) -> list[OracleCheck]:
    """The full oracle suite; a corrupted sigma must trip at least one check."""
    checks = [
        cauchy_point_check(master_seed, n_large,
                           sigma_override=sigma_override),
        tail_ratio_check(alpha, master_seed, n_med),
        self_similarity_check(alpha, master_seed, n_med,
                              sigma_override=sigma_override),
        reassembly_check(alpha, epsilon, master_seed, n_med,
                         sigma_override=sigma_override),
        symmetry_check(alpha, master_seed, n_med),
        rate_consistency_check(alpha, epsilon, 0.3),
    ]
    checks.extend(char_function_check(alpha, master_seed, n_med,
                                      sigma_override=sigma_override))
    return checks
