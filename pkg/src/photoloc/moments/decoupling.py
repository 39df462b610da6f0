"""
Numerical decoupling function theta_s and its minimum kappa_s.

For s in (0, 1), eta >= 0 and beta in C the decoupling ratio is

    r_s(eta, beta) = [ int |eta - V|^s |beta - V|^-s dV/2  /  int |beta - V|^-s dV/2 ]^(1/s)

with both integrals over V in [-1, 1], and theta_s(eta) = inf_beta r_s(eta, beta).
The ratio is invariant under beta -> conj(beta), so only Im beta >= 0 is
searched.  On the real axis the |beta - V|^-s singularity is integrable and is
handled by QUADPACK's algebraic-endpoint weights after splitting at Re beta.

Any V in [-1, 1] satisfies |eta - V| >= eta - 1, so r_s >= eta - 1 for every
beta; ``ThetaTable.lower`` combines this with the tabulated estimates into a
function that never exceeds theta_s when theta_s is increasing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from ..errors import QuadratureError

RE_RANGE = (-4.0, 4.0)
IM_RANGE = (0.0, 4.0)
_REAL_AXIS = 1e-8
_EPSABS = 1e-12
_EPSREL = 1e-10


def _quad(f, lo, hi, beta, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, lo, hi, epsabs=_EPSABS, epsrel=_EPSREL, limit=200, full_output=1, **kw)
    val, err = out[0], out[1]
    if len(out) > 3 and err > 1e-7 * max(abs(val), 1e-300):
        raise QuadratureError(f"quadrature did not converge at beta={beta}: {out[3]}", beta=beta)
    return val


def _merge(points, tol: float = 1e-9) -> list[float]:
    """Sorted breakpoints with near-duplicates (closer than ``tol``) merged."""
    out: list[float] = []
    for p in sorted(points):
        if not out or p - out[-1] > tol:
            out.append(p)
    return out


def _moment_integral(s: float, beta: complex, power_of: float | None) -> float:
    """int_{-1}^{1} |power_of - V|^s |beta - V|^-s dV / 2 (numerator factor
    omitted when ``power_of`` is None)."""
    a, b = beta.real, beta.imag
    if power_of is None:
        f = lambda v: 1.0  # noqa: E731
    else:
        eta = power_of
        f = lambda v: abs(eta - v) ** s  # noqa: E731
    kinks = [p for p in ((power_of,) if power_of is not None else ()) if -1.0 + 1e-9 < p < 1.0 - 1e-9]

    if abs(b) >= _REAL_AXIS:
        g = lambda v: f(v) * ((a - v) ** 2 + b * b) ** (-0.5 * s)  # noqa: E731
        pts = _merge(p for p in kinks + [a] if -1.0 + 1e-9 < p < 1.0 - 1e-9)
        return 0.5 * _quad(g, -1.0, 1.0, beta, points=pts or None)

    # real beta: split so the singular point only ever sits at an endpoint
    # snap a onto a nearby kink or interval end so it is always an exact cut
    near = [c for c in (-1.0, 1.0, *kinks) if abs(c - a) <= 1e-9]
    a = near[0] if near else a
    cuts = _merge([-1.0, 1.0, *kinks, *([a] if -1.0 <= a <= 1.0 else [])])
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi == a:
            total += _quad(f, lo, hi, beta, weight="alg", wvar=(0.0, -s))
        elif lo == a:
            total += _quad(f, lo, hi, beta, weight="alg", wvar=(-s, 0.0))
        else:
            total += _quad(lambda v: f(v) * abs(a - v) ** (-s), lo, hi, beta)
    return 0.5 * total


def decoupling_ratio(s: float, eta: float, beta: complex) -> float:
    """r_s(eta, beta) as defined in the module docstring."""
    beta = complex(beta)
    num = _moment_integral(s, beta, float(eta))
    den = _moment_integral(s, beta, None)
    return (num / den) ** (1.0 / s)


class ThetaEstimate(NamedTuple):
    theta: float
    beta: complex
    on_boundary: bool
    n_evaluations: int


def _check_s(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")


def _on_boundary(beta: complex, tol: float = 1e-6) -> bool:
    return (
        abs(beta.real - RE_RANGE[0]) < tol
        or abs(beta.real - RE_RANGE[1]) < tol
        or abs(beta.imag - IM_RANGE[1]) < tol
    )


@lru_cache(maxsize=4096)
def _theta_cached(s: float, eta: float, resolution: int) -> ThetaEstimate:
    n_eval = 0

    def r(re, im):
        nonlocal n_eval
        n_eval += 1
        return decoupling_ratio(s, eta, complex(re, im))

    # stage 1: coarse grid, imaginary parts clustered towards the real axis
    n_re = 40 * resolution + 1
    res = np.linspace(*RE_RANGE, n_re)
    ims = np.concatenate([[0.0], np.geomspace(1e-2, IM_RANGE[1], 8 * resolution)])
    vals = np.array([[r(a, b) for b in ims] for a in res])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)

    # stage 2: local grid one coarse cell around the stage-1 argmin
    h_re = res[1] - res[0]
    lo_im = ims[j - 1] if j > 0 else 0.0
    hi_im = ims[j + 1] if j + 1 < ims.size else ims[j]
    fine_re = np.clip(np.linspace(res[i] - h_re, res[i] + h_re, 10 * resolution + 1), *RE_RANGE)
    fine_im = np.unique(np.concatenate([[0.0], np.linspace(lo_im, hi_im, 10 * resolution + 1)]))
    fine = np.array([[r(a, b) for b in fine_im] for a in fine_re])
    k, m = np.unravel_index(np.argmin(fine), fine.shape)
    best_val, best = fine[k, m], complex(fine_re[k], fine_im[m])

    # polish: bounded 1-D refinement along the real axis when the argmin is real
    # (the common case), otherwise keep the grid value
    if best.imag == 0.0:
        h = fine_re[1] - fine_re[0]
        lo, hi = max(RE_RANGE[0], best.real - h), min(RE_RANGE[1], best.real + h)
        opt = optimize.minimize_scalar(lambda a: r(a, 0.0), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10})
        if opt.fun < best_val:
            best_val, best = float(opt.fun), complex(opt.x, 0.0)
    return ThetaEstimate(float(best_val), best, _on_boundary(best), n_eval)


def theta_s_search(s: float, eta: float, resolution: int = 1) -> ThetaEstimate:
    """Infimum of the decoupling ratio over the beta box, with its location.

    The search evaluates a coarse grid over Re beta in [-4, 4], Im beta in
    [0, 4], refines on a local grid around the coarse argmin, and finishes
    with a bounded scalar minimisation when the argmin lies on the real axis.
    ``resolution`` multiplies the density of both grids.
    """
    _check_s(s)
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    return _theta_cached(float(s), float(eta), int(resolution))


def theta_s_estimate(s: float, eta: float, resolution: int = 1) -> float:
    return theta_s_search(s, eta, resolution).theta


def kappa_s_estimate(s: float, step: float = 0.05, resolution: int = 1) -> float:
    """Minimum of theta_s over eta in [0, 2], on a grid of spacing ``step``
    with golden-section refinement around the grid minimum."""
    _check_s(s)
    grid = np.linspace(0.0, 2.0, int(round(2.0 / step)) + 1)
    vals = np.array([theta_s_estimate(s, e, resolution) for e in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    opt = optimize.minimize_scalar(lambda e: theta_s_estimate(s, e, resolution), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-4})
    return float(min(vals[i], opt.fun))


@dataclass(frozen=True)
class ThetaTable:
    """Tabulated theta_s estimates on an increasing eta grid."""

    s: float
    eta: np.ndarray
    theta: np.ndarray
    argmin_beta: np.ndarray
    boundary_argmin: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.ndim != 1 or eta.size == 0 or np.any(np.diff(eta) <= 0) or eta[0] < 0:
            raise ValueError("eta grid must be nonempty, nonnegative and strictly increasing")
        for name in ("eta", "theta", "argmin_beta", "boundary_argmin"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def kappa(self) -> float:
        return float(np.min(self.theta))

    @property
    def max_decrease(self) -> float:
        """Largest drop between consecutive entries (0 for an increasing table)."""
        return float(max(0.0, -np.min(np.diff(self.theta)))) if self.theta.size > 1 else 0.0

    def lower(self, eta) -> np.ndarray:
        """Certified-style lower bound on theta_s(eta).

        Takes the tabulated value at the largest grid point not above eta
        (valid for an increasing theta_s) and the elementary bound eta - 1,
        whichever is larger.  Below the first grid point only eta - 1 (or 0)
        is used.
        """
        e = np.abs(np.asarray(eta, dtype=float))
        idx = np.searchsorted(self.eta, e, side="right") - 1
        tab = np.where(idx >= 0, self.theta[np.clip(idx, 0, None)], 0.0)
        return np.maximum(tab, e - 1.0)

    def __call__(self, eta):
        out = self.lower(eta)
        return float(out) if np.ndim(out) == 0 else out


def default_eta_grid() -> np.ndarray:
    return np.concatenate([np.linspace(0.0, 2.0, 41), np.arange(2.5, 20.01, 0.5)])


def theta_table(s: float, eta=None, resolution: int = 1) -> ThetaTable:
    """Run ``theta_s_search`` over an eta grid (default: step 0.05 on [0, 2],
    step 0.5 on [2.5, 20])."""
    grid = default_eta_grid() if eta is None else np.asarray(eta, dtype=float)
    est = [theta_s_search(s, float(e), resolution) for e in grid]
    return ThetaTable(
        float(s),
        grid,
        np.array([e.theta for e in est]),
        np.array([e.beta for e in est]),
        np.array([e.on_boundary for e in est]),
    )
