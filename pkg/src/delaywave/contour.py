"""Argument-principle counting, root isolation and refinement in the lam-plane.

Winding numbers are computed by adaptive argument tracking along rectangle
(or circle) contours: edges are resampled until every step turns by less
than pi/2, which pins the branch of the argument.  Since the tracked
functions are analytic, the winding equals the number of enclosed zeros
counted with multiplicity.

Double roots are certified structurally rather than by ever-finer bisection:
principal-value tracking cannot see the full 2*pi swing of a quadratic dip
that sits close to an edge, so a winding-2 box first tries Newton on the
derivative and accepts a multiplicity-2 root when the residual puts the
would-be pair closer than double precision can separate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .chareq import CharKind, DelaySystem, ExpSum, char_expsum, g_expsum
from .polyform import disk_roots, reduce_to_polynomial

__all__ = [
    "ComplexRect",
    "RootRecord",
    "OnContourZero",
    "MaxDepthExceeded",
    "MultiplicityCapExceeded",
    "winding_rect",
    "count_in_disk",
    "count_in_strip",
    "isolate_and_refine",
    "spectral_abscissa",
    "min_unstable_imag",
    "re_bound",
    "NO_ROOTS",
]

NO_ROOTS = float("-inf")


class OnContourZero(ArithmeticError):
    """The contour passes through (or too close to) a zero; perturb and retry."""


class MaxDepthExceeded(ArithmeticError):
    """Rectangle bisection exceeded its depth cap (root cluster or contact)."""


class MultiplicityCapExceeded(ArithmeticError):
    """A maximally refined box still holds winding > 2.

    Characteristic roots of the cascade have multiplicity at most two; this
    error fires instead of silently trusting that bound.
    """


@dataclass(frozen=True)
class ComplexRect:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("degenerate rectangle")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def diag(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def dilated(self, d: float) -> "ComplexRect":
        return ComplexRect(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d)

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (
            self.re_min - pad <= z.real <= self.re_max + pad
            and self.im_min - pad <= z.imag <= self.im_max + pad
        )


@dataclass(frozen=True)
class RootRecord:
    lam: complex
    residual: float
    multiplicity: int


def _track_segment(func, za, zb, n0, zero_tol, max_pass=60):
    """Sample func on the straight segment [za, zb] until arg steps < pi/2."""
    t = np.linspace(0.0, 1.0, n0)
    z = za + (zb - za) * t
    w = func(z)
    for _ in range(max_pass):
        absw = np.abs(w)
        if np.any(absw < zero_tol):
            raise OnContourZero("|func| below tolerance on contour")
        dphi = np.angle(w[1:] / w[:-1])
        bad = np.abs(dphi) >= 0.5 * np.pi
        if not bad.any():
            return float(dphi.sum())
        tm = 0.5 * (t[:-1][bad] + t[1:][bad])
        t = np.sort(np.concatenate([t, tm]))
        z = za + (zb - za) * t
        w = func(z)
    raise OnContourZero("argument tracking did not settle (zero very near contour)")


def _winding_rect_once(func, rect, n0, zero_tol) -> int:
    corners = [
        complex(rect.re_min, rect.im_min),
        complex(rect.re_max, rect.im_min),
        complex(rect.re_max, rect.im_max),
        complex(rect.re_min, rect.im_max),
    ]
    total = 0.0
    for za, zb in zip(corners, corners[1:] + corners[:1]):
        total += _track_segment(func, za, zb, n0, zero_tol)
    k = total / (2.0 * np.pi)
    if abs(k - round(k)) > 0.25:
        raise OnContourZero(f"non-integer winding {k:.3f}")
    return int(round(k))


def winding_rect(
    func: Callable[[np.ndarray], np.ndarray],
    rect: ComplexRect,
    n0: int = 17,
    zero_tol: float = 1e-12,
) -> int:
    """Winding number of ``func`` around 0 along the rectangle boundary.

    ``func`` must accept complex ndarrays.  Equals the number of zeros of an
    analytic ``func`` inside the rectangle, counted with multiplicity.
    Principal-value tracking alone can settle on an aliased count when a
    coarse step hides a full turn, so the count is recomputed at doubled
    initial density until two consecutive rounds agree.  Raises
    :class:`OnContourZero` when a sample of |func| drops below ``zero_tol``;
    the caller should perturb the rectangle and retry.
    """
    k_prev = _winding_rect_once(func, rect, n0, zero_tol)
    for _ in range(7):
        n0 = 2 * n0 - 1
        k = _winding_rect_once(func, rect, n0, zero_tol)
        if k == k_prev:
            return k
        k_prev = k
    raise OnContourZero("winding did not stabilise under sample doubling")


def expsum_sample_hint(es: ExpSum, rect: ComplexRect) -> int:
    """Initial edge density matched to the fastest phase rotation of ``es``."""
    if not es.rates:
        return 17
    rate = max(abs(a) for a in es.rates)
    span = max(rect.re_max - rect.re_min, rect.im_max - rect.im_min)
    return min(20001, max(17, int(rate * span)))


def _winding_circle_once(func, n0, zero_tol, max_pass=60) -> int:
    th = np.linspace(0.0, 2.0 * np.pi, n0)
    w = func(np.exp(1j * th))
    for _ in range(max_pass):
        absw = np.abs(w)
        if np.any(absw < zero_tol):
            raise OnContourZero("|func| below tolerance on |z| = 1")
        dphi = np.angle(w[1:] / w[:-1])
        bad = np.abs(dphi) >= 0.5 * np.pi
        if not bad.any():
            k = dphi.sum() / (2.0 * np.pi)
            if abs(k - round(k)) > 0.25:
                raise OnContourZero(f"non-integer winding {k:.3f}")
            return int(round(k))
        tm = 0.5 * (th[:-1][bad] + th[1:][bad])
        th = np.sort(np.concatenate([th, tm]))
        w = func(np.exp(1j * th))
    raise OnContourZero("argument tracking did not settle on |z| = 1")


def _winding_circle(func, n0=65, zero_tol=1e-12) -> int:
    k_prev = _winding_circle_once(func, n0, zero_tol)
    for _ in range(7):
        n0 = 2 * n0 - 1
        k = _winding_circle_once(func, n0, zero_tol)
        if k == k_prev:
            return k
        k_prev = k
    raise OnContourZero("winding did not stabilise under sample doubling")


def count_in_disk(p) -> int:
    """Zeros of the polynomial ``p`` in the open unit disk, by winding.

    Raises :class:`OnContourZero` when p has a root on (or numerically on)
    the unit circle.
    """
    if p.degree == 0:
        if p.coeffs[0] == 0.0:
            raise ValueError("zero polynomial")
        return 0
    coeffs_desc = np.asarray(p.coeffs[::-1])
    return _winding_circle(lambda z: np.polyval(coeffs_desc, z), n0=max(65, 8 * p.degree + 1))


def count_in_strip(sys: DelaySystem, a: int, b: int, re_max: Optional[float] = None) -> int:
    """Number of solutions of g(lam) = c in (0, re_max) x (a*pi, b*pi).

    ``a`` and ``b`` must be nonzero integers with a < b; on the horizontal
    edges Im(lam) = a*pi, b*pi the map g stays off the real axis, so a zero
    of g - c there signals misuse (a = 0 or b = 0) or a genuine root on the
    imaginary axis, reported as :class:`OnContourZero`.
    """
    if sys.kind is not CharKind.CASCADE_EQUAL_GAINS:
        raise ValueError("strip counting applies to the equal-gain variant")
    if not (isinstance(a, int) and isinstance(b, int)) or a == 0 or b == 0 or a >= b:
        raise ValueError("need nonzero integers a < b")
    if re_max is None:
        re_max = re_bound(sys)
    func = g_expsum(sys.tau, sys.c2)
    rect = ComplexRect(0.0, re_max, a * np.pi, b * np.pi)
    return winding_rect(func, rect, n0=expsum_sample_hint(func, rect))


def re_bound(sys: DelaySystem) -> float:
    """Real part beyond which the characteristic function cannot vanish.

    Solves, by bisection, the crossover where the fastest-growing
    exponential term dominates the sum of the magnitudes of all others, and
    adds 0.5.  To the right of the returned abscissa the triangle inequality
    forbids zeros.
    """
    es = char_expsum(sys)
    if len(es.rates) <= 1:
        return 0.5
    a0 = es.rates[-1]
    c0 = abs(es.coefs[-1])
    rest = [(abs(c), a) for c, a in zip(es.coefs[:-1], es.rates[:-1])]

    def gap(s: float) -> float:
        vals = [math.log(c) + a * s for c, a in rest]
        top = max(vals)
        return math.log(c0) + a0 * s - (top + math.log(sum(math.exp(v - top) for v in vals)))

    if gap(0.0) > 0.0:
        return 0.5
    hi = 1.0
    while gap(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise ArithmeticError("no dominance crossover found")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return hi + 0.5


def _newton(func, dfunc, z0, rect, pad, iters=80, tol=1e-15):
    z = z0
    for _ in range(iters):
        fz = complex(func(np.array([z]))[0])
        dz = complex(dfunc(np.array([z]))[0])
        if dz == 0:
            return None
        step = fz / dz
        z2 = z - step
        if not rect.contains(z2, pad):
            return None
        z = z2
        if abs(step) < tol * (1.0 + abs(z)):
            return z
    return z


def _winding_with_retries(func, rect, rng, n0=17) -> tuple:
    """Winding with the contour-contact policy: dilate with jitter, 8 tries."""
    try:
        return winding_rect(func, rect, n0=n0), rect
    except OnContourZero:
        last = None
        for _ in range(8):
            d = 1e-7 * (1.0 + max(abs(rect.re_min), abs(rect.re_max), abs(rect.im_min), abs(rect.im_max)))
            r2 = rect.dilated(d * (1.0 + rng.random()))
            try:
                return winding_rect(func, r2, n0=n0), r2
            except OnContourZero as exc:
                last = exc
        raise last


_SPLIT_FRACS = (0.5, 0.53, 0.46, 0.57, 0.42, 0.61, 0.38, 0.65, 0.35)


def isolate_and_refine(
    sys: DelaySystem,
    rect: ComplexRect,
    resid_tol: float = 1e-10,
    max_depth: int = 60,
) -> List[RootRecord]:
    """Locate every characteristic root of ``sys`` inside ``rect``.

    Rectangles are bisected until each piece holds winding <= 1 (or a
    certified double root); Newton finishes the job with a bisection
    fallback whenever it strays outside its box.  Multiplicity 2 is
    assigned by refining the zero of the derivative and checking that the
    residual of the function there is below what two double-precision
    simple roots could produce.
    """
    func = char_expsum(sys)
    dfunc = func.derivative()
    d2func = dfunc.derivative()
    rng = np.random.default_rng(0xC0417)
    k, rect = _winding_with_retries(func, rect, rng, n0=expsum_sample_hint(func, rect))
    out: List[RootRecord] = []
    _isolate(func, dfunc, d2func, rect, k, 0, max_depth, resid_tol, rng, out)
    out.sort(key=lambda r: (r.lam.imag, r.lam.real))
    return out


def _isolate(func, dfunc, d2func, rect, k, depth, max_depth, resid_tol, rng, out) -> None:
    if k == 0:
        return
    pad = 1e-9 + 0.05 * rect.diag
    if k == 1:
        z = _newton(func, dfunc, rect.center, rect, pad)
        if z is not None:
            res = abs(complex(func(np.array([z]))[0]))
            if res < resid_tol:
                out.append(RootRecord(z, res, 1))
                return
    if k == 2:
        zd = _newton(dfunc, d2func, rect.center, rect, pad)
        if zd is not None:
            fz = abs(complex(func(np.array([zd]))[0]))
            f2 = abs(complex(d2func(np.array([zd]))[0]))
            sep = math.sqrt(2.0 * fz / f2) if f2 > 0 else math.inf
            if sep < 1e-7 and fz < resid_tol:
                out.append(RootRecord(zd, fz, 2))
                return
    if k > 2 and rect.diag < 1e-7:
        raise MultiplicityCapExceeded(
            f"winding {k} in a box of diameter {rect.diag:.1e}; "
            "roots of this family have multiplicity at most two"
        )
    if depth >= max_depth:
        raise MaxDepthExceeded(f"bisection depth {depth} reached at {rect}")
    horizontal = (rect.re_max - rect.re_min) >= (rect.im_max - rect.im_min)
    for frac in _SPLIT_FRACS:
        if horizontal:
            mid = rect.re_min + frac * (rect.re_max - rect.re_min)
            r1 = ComplexRect(rect.re_min, mid, rect.im_min, rect.im_max)
            r2 = ComplexRect(mid, rect.re_max, rect.im_min, rect.im_max)
        else:
            mid = rect.im_min + frac * (rect.im_max - rect.im_min)
            r1 = ComplexRect(rect.re_min, rect.re_max, rect.im_min, mid)
            r2 = ComplexRect(rect.re_min, rect.re_max, mid, rect.im_max)
        try:
            k1 = winding_rect(func, r1, n0=expsum_sample_hint(func, r1))
            k2 = winding_rect(func, r2, n0=expsum_sample_hint(func, r2))
        except OnContourZero:
            continue
        if k1 + k2 != k:
            continue
        _isolate(func, dfunc, d2func, r1, k1, depth + 1, max_depth, resid_tol, rng, out)
        _isolate(func, dfunc, d2func, r2, k2, depth + 1, max_depth, resid_tol, rng, out)
        return
    raise OnContourZero(f"could not split {rect} without touching a root")


def spectral_abscissa(sys: DelaySystem) -> float:
    """sup Re(lam) over the characteristic roots (rational delay only).

    With tau = m/n the roots fill vertical lines Re(lam) = -n log|z*| over
    the nonzero roots z* of the disk polynomial; the supremum is attained.
    Returns ``NO_ROOTS`` (-inf) when the reduced polynomial is a nonzero
    constant and the spectrum is empty.
    """
    if sys.tau_rational is None:
        raise ValueError("spectral_abscissa needs an exact rational delay")
    p = reduce_to_polynomial(sys)
    if p.degree == 0:
        return NO_ROOTS
    n = sys.tau_rational.den
    mods = np.abs(np.asarray(disk_roots(p).roots))
    return float(-n * np.log(mods.min()))


def min_unstable_imag(
    sys: DelaySystem,
    im_cap: float,
    on_tol: float = 1e-9,
) -> Optional[float]:
    """Smallest |Im lam| over roots with Re lam >= 0, up to ``im_cap``.

    Returns None when no such root exists below the cap.  Rational delays
    use the disk polynomial (each root z with |z| <= 1 contributes the
    family Im lam = -n Arg z + 2 pi n k, minimised by n |Arg z|); otherwise
    strips of height pi are scanned by winding.
    """
    if sys.tau_rational is not None:
        p = reduce_to_polynomial(sys)
        if p.degree == 0:
            return None
        n = sys.tau_rational.den
        roots = np.asarray(disk_roots(p, on_tol).roots)
        sel = np.abs(roots) <= 1.0 + on_tol
        if not sel.any():
            return None
        vals = n * np.abs(np.angle(roots[sel]))
        vals = vals[vals <= im_cap]
        return float(vals.min()) if vals.size else None
    return _min_unstable_imag_scan(sys, im_cap)


def _min_unstable_imag_scan(sys: DelaySystem, im_cap: float) -> Optional[float]:
    reb = re_bound(sys)
    func = char_expsum(sys)
    rng = np.random.default_rng(0x5CA9)
    j = 0
    while j * np.pi < im_cap:
        lo, hi = j * np.pi, min((j + 1) * np.pi, im_cap)
        if hi - lo < 1e-9:
            break
        rect = ComplexRect(-1e-9, reb, lo - 1e-9, hi)
        k, rect = _winding_with_retries(func, rect, rng, n0=expsum_sample_hint(func, rect))
        if k > 0:
            roots = isolate_and_refine(sys, rect)
            vals = [abs(r.lam.imag) for r in roots if r.lam.real >= -1e-8]
            if vals:
                return min(vals)
        j += 1
    return None
