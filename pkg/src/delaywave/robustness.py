"""Sensitivity of the stabilised loop to small perturbations of the delay.

A delay perturbed away from a stabilising value (zero or an even integer)
always re-creates unstable roots, but only at frequencies of order 1/|eps|.
This module computes the exclusion/existence bounds for the lowest unstable
frequency lambda_eps, locates it, and constructs the on-axis witness pair
(delta*, beta*) that certifies existence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .chareq import DelaySystem, ExpSum, equal_gain_system
from .contour import (
    ComplexRect,
    OnContourZero,
    expsum_sample_hint,
    min_unstable_imag,
    re_bound,
    winding_rect,
)
from .polyform import StabilityState
from .regions import classify, stability_region
from .chareq import CharKind

__all__ = [
    "PerturbationCase",
    "RobustnessBounds",
    "WitnessFEps",
    "SweepRow",
    "WindowEmpty",
    "LambdaEpsNotFound",
    "bounds_for",
    "perturbed_system",
    "check_low_freq_clear",
    "find_lambda_eps",
    "witness_F_epsilon",
    "h_delta_expsum",
    "sweep",
]


class WindowEmpty(ArithmeticError):
    """No admissible index k* in the witness window (eps too large)."""


class LambdaEpsNotFound(ArithmeticError):
    """No unstable root found below the existence cap (after one widening)."""


@dataclass(frozen=True)
class PerturbationCase:
    """Perturbed delay tau = base_tau + epsilon around a stabilising base.

    base_tau is 0 (with c > 0) or an even integer 2l with (2l, c) inside the
    closed-form window.  epsilon may be negative for even bases.
    """

    base_tau: float
    epsilon: float
    c: float
    l: Optional[int] = None

    def __post_init__(self):
        if self.base_tau + self.epsilon <= 0:
            raise ValueError("perturbed delay must stay positive")
        if self.base_tau == 0.0:
            if self.epsilon <= 0:
                raise ValueError("base 0 takes epsilon > 0")
            if self.c <= 0:
                raise ValueError("base 0 requires c > 0")
        else:
            l = self.l if self.l is not None else int(round(self.base_tau / 2))
            if l < 1 or 2 * l != round(self.base_tau) or abs(self.base_tau - 2 * l) > 1e-12:
                raise ValueError("base_tau must be 0 or an even integer 2l")
            region = stability_region(float(2 * l), CharKind.CASCADE_EQUAL_GAINS)
            if not region.contains(self.c):
                raise ValueError(f"(2l, c) = ({2 * l}, {self.c}) is outside the stability window")
            object.__setattr__(self, "l", l)

    @property
    def tau(self) -> float:
        return self.base_tau + self.epsilon


@dataclass(frozen=True)
class RobustnessBounds:
    """Exclusion constant C1, existence constant C2, and the integer caps.

    s_eps is the smallest integer with s*pi > C1/|eps|; S_eps caps the
    existence stripe (largest integer with S*pi < C2/|eps| for even bases,
    smallest integer exceeding 1/eps for base 0).  Both are None at eps = 0.
    """

    c_tilde: Optional[float]
    C1: float
    C2: float
    s_eps: Optional[int]
    S_eps: Optional[int]


def bounds_for(case: PerturbationCase) -> RobustnessBounds:
    """Frequency bounds for the perturbed case.

    Base 0: C1 = pi/2 and any fixed C2 > pi works for the exclusion side;
    1.1*pi is used for reproducibility, while the existence cap comes from
    S_eps.  Base 2l: with |c| = sin(c~ pi / (2(2l-1))) the constants are
    C1 = (1 - c~) pi / 2 and C2 = pi / 2.
    """
    eps = abs(case.epsilon)
    if case.base_tau == 0.0:
        c_tilde = None
        C1 = math.pi / 2.0
        C2 = 1.1 * math.pi
        S_eps = math.floor(1.0 / eps) + 1 if eps > 0 else None
    else:
        l = case.l
        w = math.sin(math.pi / (2 * (2 * l - 1)))
        if not 0.0 < abs(case.c) < w:
            raise ValueError(f"|c| must lie in (0, {w:.6f}) for base 2l = {2 * l}")
        c_tilde = (2 * (2 * l - 1) / math.pi) * math.asin(abs(case.c))
        C1 = (1.0 - c_tilde) * math.pi / 2.0
        C2 = math.pi / 2.0
        S_eps = math.ceil(C2 / (eps * math.pi)) - 1 if eps > 0 else None
    s_eps = math.floor(C1 / (eps * math.pi)) + 1 if eps > 0 else None
    return RobustnessBounds(c_tilde, C1, C2, s_eps, S_eps)


def perturbed_system(case: PerturbationCase) -> DelaySystem:
    return equal_gain_system(case.c, case.tau)


def check_low_freq_clear(case: PerturbationCase, margin_frac: float = 1e-6) -> bool:
    """True iff no root lies in Re >= 0 with |Im lam| below (1 - margin) C1/|eps|.

    At eps = 0 the base system is exponentially stable, so every height is
    clear and the check reduces to the classifier.  By conjugate symmetry
    only the upper strip is scanned.
    """
    if case.epsilon == 0.0:
        return classify(perturbed_system(case)).state is StabilityState.STABLE
    bounds = bounds_for(case)
    height = bounds.C1 / abs(case.epsilon)
    if height >= 1e4:
        raise ValueError("clearance height above the desk-scale cap 1e4; enlarge eps")
    sys = perturbed_system(case)
    from .chareq import char_expsum

    func = char_expsum(sys)
    rect = ComplexRect(0.0, re_bound(sys), 0.0, height * (1.0 - margin_frac))
    rng = np.random.default_rng(0xCAFE)
    n0 = expsum_sample_hint(func, rect)
    for _ in range(9):
        try:
            return winding_rect(func, rect, n0=n0) == 0
        except OnContourZero:
            d = 1e-7 * (1.0 + height) * (1 + rng.random())
            rect = rect.dilated(d)
    raise OnContourZero("persistent contour contact in clearance check")


def find_lambda_eps(case: PerturbationCase) -> float:
    """Lowest unstable frequency inf{|Im lam| : root with Re lam >= 0}.

    Scans up to 2*C2/|eps| + 2pi (widened once if needed) and asserts the
    exclusion/existence sandwich C1/|eps| <= lambda_eps <= (S_eps + 1) pi.
    """
    if case.epsilon == 0.0:
        raise ValueError("eps = 0 has no unstable roots; the sweep reports it as absent")
    bounds = bounds_for(case)
    eps = abs(case.epsilon)
    sys = perturbed_system(case)
    cap = 2.0 * bounds.C2 / eps + 2.0 * math.pi
    val = min_unstable_imag(sys, cap)
    if val is None:
        val = min_unstable_imag(sys, 2.0 * cap)
    if val is None:
        raise LambdaEpsNotFound(
            f"no unstable root below |Im| = {2 * cap:.2f} for tau = {case.tau}"
        )
    lo = bounds.C1 / eps
    hi = (bounds.S_eps + 1) * math.pi
    if not (lo - 1e-6 <= val <= hi + 1e-6):
        raise LambdaEpsNotFound(
            f"lambda_eps = {val:.6f} violates the sandwich [{lo:.6f}, {hi:.6f}]"
        )
    return float(val)


def h_delta_expsum(l: int, delta: float, offset: float = 0.0) -> ExpSum:
    """h_delta(lam) - offset with h_delta(lam) = -e^{delta lam} e^{2l lam} (1 + e^{-2 lam}) / 2."""
    return ExpSum.of(
        [(-0.5, 2 * l + delta), (-0.5, 2 * l + delta - 2.0), (-offset, 0.0)]
    )


@dataclass(frozen=True)
class WitnessFEps:
    k_star: int
    l_star: int
    delta_star: float
    beta_star: float
    residual: float


def witness_F_epsilon(l: int, eps: float, c: float) -> WitnessFEps:
    """On-axis witness (delta*, beta*) with h_{delta*}(i beta*) = c, delta* <= eps.

    With n = l, the closed form
    delta* = (2n - 1)(1 - c~) / (2 k* - 1 + c~),
    beta*  = k* pi / (2n - 1 + delta*)
    places beta* at distance (1 - c~) pi / (2(2n - 1)) below k* pi/(2n - 1)
    and satisfies h_{delta*}(i beta*) = c identically provided
    k* = n (mod 2n - 1); the largest such k* not exceeding (2n - 1) S_eps is
    used, and l* = (k* - n)/(2n - 1) records the integer part.  The h
    residual is evaluated and must vanish to 1e-8, delta* must not exceed
    eps, and beta* stays below S_eps pi.
    """
    if l < 1 or eps <= 0:
        raise ValueError("need l >= 1 and eps > 0")
    case = PerturbationCase(2.0 * l, eps, c)
    bounds = bounds_for(case)
    n = l
    c_tilde = bounds.c_tilde
    S = bounds.S_eps
    top = (2 * n - 1) * S
    for k in range(top, top - 2 * (2 * n - 1) - 1, -1):
        if k <= 0:
            break
        if k % (2 * n - 1) != n % (2 * n - 1):
            continue
        l_star = (k - n) // (2 * n - 1)
        delta = (2 * n - 1) * (1.0 - c_tilde) / (2 * k - 1 + c_tilde)
        beta = k * math.pi / (2 * n - 1 + delta)
        if not (0.0 < delta <= eps and beta <= S * math.pi):
            continue
        h = h_delta_expsum(n, delta)
        residual = abs(complex(h(np.array([1j * beta]))[0]) - c)
        if residual < 1e-8:
            return WitnessFEps(k, l_star, delta, beta, residual)
    raise WindowEmpty(
        f"no admissible k* near (2n-1) S_eps = {top}; eps = {eps} too large for the construction"
    )


@dataclass(frozen=True)
class SweepRow:
    eps: float
    lambda_eps: Optional[float]
    eps_lambda_eps: Optional[float]
    low_freq_clear: Optional[bool]
    error: Optional[str] = None


def sweep(case_template: PerturbationCase, eps_list: Sequence[float]) -> List[SweepRow]:
    """Batch lambda_eps / clearance over a list of perturbations.

    Rows keep the input order; failures are captured per row and the sweep
    continues.  eps = 0 rows report lambda_eps as absent (stable base).
    """
    rows: List[SweepRow] = []
    for eps in eps_list:
        try:
            case = replace(case_template, epsilon=float(eps))
            clear = check_low_freq_clear(case)
            if eps == 0.0:
                rows.append(SweepRow(float(eps), None, None, clear))
                continue
            lam = find_lambda_eps(case)
            rows.append(SweepRow(float(eps), lam, abs(eps) * lam, clear))
        except Exception as exc:  # per-row capture by contract
            rows.append(SweepRow(float(eps), None, None, None, f"{type(exc).__name__}: {exc}"))
    return rows
