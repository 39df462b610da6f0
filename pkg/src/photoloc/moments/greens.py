"""
Finite-volume Green's functions of the effective operators and the checks
built directly on them: the Green's relation, the single-site Moebius
dependence, the Simon-Wolff sum and the Wegner-type tail bound.

Convention: G(x) = <delta_x, (H_mu - E - i eps)^-1 delta_x0>.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from ..errors import SingularAtE, SolverError

RCOND_FLOOR = 1e-10
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class GreensVector:
    values: np.ndarray
    source: int
    E: float
    epsilon: float
    mu: float | None
    residual: float

    @property
    def norm2(self) -> float:
        """sum_y |G(y)|^2."""
        return float(np.vdot(self.values, self.values).real)


def _matrix(H) -> np.ndarray:
    return np.asarray(getattr(H, "matrix", H))


def greens(H_mu, x0: int, E: float, epsilon: float = 0.0) -> GreensVector:
    """Column x0 of the resolvent by a dense LU solve.

    At epsilon = 0 the system is real; the reciprocal condition number of the
    LU factors (LAPACK ``gecon``) below ``RCOND_FLOOR`` raises SingularAtE.
    The solve is rejected with SolverError if the residual exceeds
    ``RESIDUAL_TOL * ||G||``.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    H = _matrix(H_mu)
    n = H.shape[0]
    z = E + 1j * epsilon if epsilon > 0 else E
    A = H - z * np.eye(n)
    rhs = np.zeros(n, dtype=A.dtype)
    rhs[x0] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            lu, piv = sla.lu_factor(A, check_finite=False)
        except (sla.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
            raise SingularAtE(f"factorisation failed at E={E}, eps={epsilon}: {exc}") from exc
    if epsilon == 0:
        anorm = np.linalg.norm(A, 1)
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
        if info != 0 or rcond < RCOND_FLOOR:
            raise SingularAtE(f"E={E} is within numerical distance of the spectrum (rcond={rcond:.3e})")
    G = sla.lu_solve((lu, piv), rhs, check_finite=False)
    gnorm = np.linalg.norm(G)
    res = float(np.linalg.norm(A @ G - rhs))
    if not np.isfinite(gnorm) or res > RESIDUAL_TOL * max(gnorm, 1.0):
        raise SolverError(f"resolvent residual {res:.3e} too large for ||G||={gnorm:.3e}")
    return GreensVector(G, int(x0), float(E), float(epsilon), getattr(H_mu, "mu", None), res)


def greens_relation_residual(H_mu, G: GreensVector) -> float:
    """max over x != x0 of |(E + i eps - lambda (1 + V(x))) G(x) - sum_x' T(x, x') G(x')| / ||G||,
    using the kernel and potential stored on the effective operator."""
    T = H_mu.kernel.entries
    local = (G.E + 1j * G.epsilon) - H_mu.potential
    r = local * G.values - T @ G.values
    r[G.source] = 0.0
    return float(np.max(np.abs(r)) / np.linalg.norm(G.values))


class KreinFit(NamedTuple):
    alpha: complex
    beta: complex
    max_deviation: float
    degenerate: bool


def krein_dependence_check(H_mu, x0: int, x: int, E: float, epsilon: float = 1e-6,
                           n_values: int = 7) -> KreinFit:
    """Fit G(x) = alpha / (V(x) - beta) while V(x) alone sweeps [-1, 1].

    The fit uses the two endpoint values; the reported deviation is the
    largest relative mismatch at the interior sweep points.  A fit is flagged
    degenerate when G(x) is numerically zero or does not vary with V(x).
    """
    if n_values < 5:
        raise ValueError("the sweep needs at least 5 values")
    lam = H_mu.disorder_strength
    base = np.array(H_mu.matrix, dtype=float)
    v_now = float(H_mu.field.values[x])
    vs = np.linspace(-1.0, 1.0, n_values)
    Gx = np.empty(n_values, dtype=complex)
    for j, v in enumerate(vs):
        A = base.copy()
        A[x, x] += lam * (v - v_now)
        Gx[j] = greens(A, x0, E, epsilon).values[x]
    scale = np.max(np.abs(Gx))
    ga, gb = Gx[0], Gx[-1]
    if scale < 1e-300 or abs(ga - gb) <= 1e-12 * scale:
        return KreinFit(0j, 0j, float("nan"), True)
    beta = (ga * vs[0] - gb * vs[-1]) / (ga - gb)
    alpha = ga * (vs[0] - beta)
    model = alpha / (vs - beta)
    dev = float(np.max(np.abs(model[1:-1] - Gx[1:-1]) / np.abs(Gx[1:-1])))
    return KreinFit(complex(alpha), complex(beta), dev, False)


class SimonWolffResult(NamedTuple):
    epsilons: np.ndarray
    sums: np.ndarray
    growth_exponent: float

    @property
    def bounded(self) -> bool:
        """Growth slower than eps^-1/2 over the recorded range."""
        return self.growth_exponent < 0.5


def simon_wolff_sum(H_mu, x0: int, E: float, epsilons: Sequence[float]) -> SimonWolffResult:
    """sum_y |G(x0, y, E + i eps)|^2 for each eps.

    ``growth_exponent`` is the log-log slope of the sum against 1/eps over
    the two smallest eps: about 0 when the sum stays bounded, about 1 inside
    continuous spectrum and 2 at an isolated eigenvalue.
    """
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be positive and strictly decreasing")
    sums = np.array([greens(H_mu, x0, E, e).norm2 for e in eps])
    if eps.size >= 2:
        slope = float(np.log(sums[-1] / sums[-2]) / np.log(eps[-2] / eps[-1]))
    else:
        slope = float("nan")
    return SimonWolffResult(eps, sums, slope)


class WegnerCheck(NamedTuple):
    t: np.ndarray
    survival: np.ndarray
    bound: np.ndarray
    standard_error: np.ndarray
    n_samples: int

    @property
    def passed(self) -> bool:
        return bool(np.all(self.survival <= self.bound + 3.0 * self.standard_error))


def wegner_bound(t, coupling: float, mu_minus_omega: float) -> np.ndarray:
    """|mu - Omega| 4 sqrt(2) / (g^2 rho0 t), the tail bound for disorder
    strength lambda = g^2 rho0 / |mu - Omega|."""
    return abs(mu_minus_omega) * 4.0 * np.sqrt(2.0) / (coupling * np.asarray(t, dtype=float))


def wegner_tail_check(samples: np.ndarray, coupling: float, mu_minus_omega: float,
                      t: Sequence[float] | None = None) -> WegnerCheck:
    """Empirical survival P(|G| >= t) against the tail bound.

    ``t`` defaults to powers of two from 1 to 2^12.  At least 512 samples are
    required.
    """
    g = np.abs(np.asarray(samples))
    if g.size < 512:
        raise ValueError(f"the tail check needs at least 512 samples, got {g.size}")
    tt = 2.0 ** np.arange(13) if t is None else np.asarray(t, dtype=float)
    surv = np.array([np.mean(g >= ti) for ti in tt])
    se = np.sqrt(surv * (1.0 - surv) / g.size)
    return WegnerCheck(tt, surv, wegner_bound(tt, coupling, mu_minus_omega), se, int(g.size))
