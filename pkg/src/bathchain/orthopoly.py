"""Recurrence coefficients of monic orthogonal polynomials.

Given a positive measure on [0, 1] (continuous weight, discrete lines, or a
mix), the monic polynomial family pi_n obeys

    k*pi_n(k) = alpha_n*pi_n(k) + beta_n*pi_{n-1}(k) + pi_{n+1}(k)

and the (alpha_n, beta_n) sequences are what the chain construction consumes:
site energies are omega_c*alpha_n and hoppings omega_c*sqrt(beta_{n+1}).
Closed forms are used where they exist (power-law weights, geometrically
discretized power laws); everything else goes through composite quadrature
plus a tridiagonalization of the discretized measure.

Index convention: beta[0] stores the total mass of the measure (cm^-2 for
physical measures); beta[n] for n >= 1 are the dimensionless recurrence
coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import Breakdown, InvalidParameter, NotConverged, QuadratureFailure
from .specdens import UnitMeasure

_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class RecurrenceCoefficients:
    alpha: np.ndarray
    beta: np.ndarray  # beta[0] = total mass
    n_max: int
    source: str

    def __post_init__(self):
        if len(self.alpha) != self.n_max or len(self.beta) != self.n_max:
            raise InvalidParameter("alpha/beta length must equal n_max")
        if not np.all(np.isfinite(self.alpha)) or not np.all(np.isfinite(self.beta)):
            raise Breakdown("non-finite recurrence coefficient")
        if np.any(self.beta <= 0):
            bad = int(np.argmax(self.beta <= 0))
            raise Breakdown(f"beta[{bad}] = {self.beta[bad]} is not positive")
        if np.any(self.alpha < -_BOUND_SLACK) or np.any(self.alpha > 1 + _BOUND_SLACK):
            bad = int(np.argmax((self.alpha < -_BOUND_SLACK)
                                | (self.alpha > 1 + _BOUND_SLACK)))
            raise Breakdown(
                f"alpha[{bad}] = {self.alpha[bad]} outside [0, 1] support bound")


@dataclass(frozen=True)
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.ndim != 1 or self.nodes.shape != self.weights.shape:
            raise InvalidParameter("nodes and weights must be matching 1-d arrays")
        if self.nodes.size == 0:
            raise InvalidParameter("measure needs at least one node")
        if np.any(np.diff(self.nodes) <= 0):
            raise InvalidParameter("nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise InvalidParameter("weights must be positive")

    @property
    def size(self) -> int:
        return int(self.nodes.size)


@dataclass(frozen=True)
class LogDiscretization:
    """Geometric mode ladder zeta_n = zeta_0 * Delta^-n for a power-law bath."""

    Delta: float
    s: float
    alpha: float  # power-law amplitude
    omega_c: float
    gamma: np.ndarray  # couplings, cm^-1
    zeta: np.ndarray  # mode frequencies, cm^-1
    n_max: int


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def jacobi_recurrence(s: float, n_max: int, mass: float = 1.0) -> RecurrenceCoefficients:
    """Closed-form coefficients for the weight k**s on [0, 1].

    alpha_n = 1/2 * (1 + s^2 / ((s+2n)(2+s+2n))), with the n = 0 case reduced
    to (1+s)/(2+s); beta_{n+1} is the square of the corresponding hopping
    ratio.  beta[0] is set from `mass` (the caller's measure normalization).
    """
    if s <= -1:
        raise InvalidParameter(f"power-law exponent s={s} <= -1")
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    if mass <= 0:
        raise InvalidParameter(f"mass must be positive, got {mass}")
    alpha = np.empty(n_max)
    beta = np.empty(n_max)
    alpha[0] = (1.0 + s) / (2.0 + s)
    n = np.arange(1, n_max, dtype=float)
    alpha[1:] = 0.5 * (1.0 + s * s / ((s + 2 * n) * (2 + s + 2 * n)))
    beta[0] = mass
    m = np.arange(0, n_max - 1, dtype=float)
    beta[1:] = ((1 + m) ** 2 * (1 + s + m) ** 2
                / ((s + 2 + 2 * m) ** 2 * (3 + s + 2 * m) * (1 + s + 2 * m)))
    return RecurrenceCoefficients(alpha, beta, n_max, "analytic_jacobi")


def log_discretize(alpha: float, s: float, omega_c: float, Delta: float,
                   n_max: int) -> LogDiscretization:
    """Geometric discretization of the power-law bath: couplings gamma_n and
    mode frequencies zeta_n with ratio Delta^-1 per step."""
    if Delta <= 1:
        raise InvalidParameter(f"Delta must exceed 1, got {Delta}")
    if s <= -1:
        raise InvalidParameter(f"power-law exponent s={s} <= -1")
    if alpha <= 0 or omega_c <= 0:
        raise InvalidParameter("alpha and omega_c must be positive")
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    n = np.arange(n_max, dtype=float)
    gamma2 = (2.0 * math.pi * alpha / (1.0 + s) * omega_c**2
              * (1.0 - Delta ** -(1.0 + s)) * Delta ** (-n * (1.0 + s)))
    zeta = ((s + 1.0) / (s + 2.0)
            * (1.0 - Delta ** -(s + 2.0)) / (1.0 - Delta ** -(s + 1.0))
            * omega_c * Delta**-n)
    return LogDiscretization(Delta, s, alpha, omega_c, np.sqrt(gamma2), zeta, n_max)


def log_measure(log: LogDiscretization, n_modes: int) -> DiscreteMeasure:
    """Discrete measure tridiagonalized by the geometric chain construction.

    Dimensionless nodes Delta^-k with per-mode weights gamma_k^2/(4 pi), so
    the total mass is the squared head coupling of the mapped chain.
    """
    k = np.arange(n_modes, dtype=float)
    nodes = log.Delta**-k
    gamma2 = (2.0 * math.pi * log.alpha / (1.0 + log.s) * log.omega_c**2
              * (1.0 - log.Delta ** -(1.0 + log.s))
              * log.Delta ** (-k * (1.0 + log.s)))
    weights = gamma2 / (4.0 * math.pi)
    return DiscreteMeasure(nodes[::-1].copy(), weights[::-1].copy())


def little_q_jacobi_chain(log: LogDiscretization) -> RecurrenceCoefficients:
    """Closed-form recurrence for the geometrically discretized power law.

    The discrete measure with nodes Delta^-k and weights proportional to
    Delta^-k(1+s) is the orthogonality measure of a q-deformed Jacobi family
    with q = Delta^-1, a = Delta^-s, b = 1; its recurrence constants A_n, C_n
    give alpha_n = A_n + C_n and beta_{n+1} = A_n * C_{n+1} directly.  beta[0]
    carries the summed mode weights gamma_k^2/(4 pi) (geometric series in
    closed form).  The n-independent energy prefactor of the physical chain is
    zeta_0 = log.zeta[0].
    """
    n_max = log.n_max
    q = 1.0 / log.Delta
    a = q**log.s

    def a_const(n: int) -> float:
        return (q**n * (1.0 - a * q ** (n + 1)) ** 2
                / ((1.0 - a * q ** (2 * n + 1)) * (1.0 - a * q ** (2 * n + 2))))

    def c_const(n: int) -> float:
        if n == 0:
            return 0.0
        return (a * q**n * (1.0 - q**n) ** 2
                / ((1.0 - a * q ** (2 * n)) * (1.0 - a * q ** (2 * n + 1))))

    A = np.array([a_const(n) for n in range(n_max)])
    C = np.array([c_const(n) for n in range(n_max + 1)])
    if np.any(A <= 0) or np.any(C[1:] <= 0):
        raise Breakdown("nonpositive q-recurrence constant")
    alpha = A + C[:n_max]
    beta = np.empty(n_max)
    beta[0] = log.alpha * log.omega_c**2 / (2.0 * (1.0 + log.s))
    beta[1:] = A[: n_max - 1] * C[1:n_max]
    return RecurrenceCoefficients(alpha, beta, n_max, "analytic_little_q")


# ---------------------------------------------------------------------------
# Discretization of continuous measures
# ---------------------------------------------------------------------------

def _graded_edges(n_intervals: int) -> np.ndarray:
    """Partition of [0, 1]: arcsine-spaced cells in the bulk (matching the
    endpoint clustering of orthogonal-polynomial zeros) with the first cell
    subdivided geometrically toward 0 to resolve small-k weight structure."""
    if n_intervals == 1:
        return np.array([0.0, 1.0])
    n_geo = min(24, n_intervals // 2)
    n_cheb = n_intervals - n_geo
    cheb = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_cheb + 1) / n_cheb))
    geo = cheb[1] * 2.0 ** -np.arange(n_geo, 0.0, -1.0)
    return np.concatenate(([0.0], geo, cheb[1:]))


def quadrature_discretize(measure: UnitMeasure, n_intervals: int,
                          nodes_per_interval: int) -> DiscreteMeasure:
    """Composite Gauss-Legendre discretization on a mesh graded toward k = 0
    and toward the support endpoints, merged with the measure's exact lines."""
    if n_intervals < 1 or nodes_per_interval < 1:
        raise InvalidParameter("interval and node counts must be >= 1")
    edges = _graded_edges(n_intervals)
    gx, gw = np.polynomial.legendre.leggauss(nodes_per_interval)
    nodes_list = []
    weights_list = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        x = lo + half * (gx + 1.0)
        try:
            wvals = np.asarray(measure.weight(x), dtype=float)
        except Exception as exc:  # pragma: no cover - defensive
            raise QuadratureFailure(f"weight evaluation failed: {exc}") from exc
        if wvals.shape != x.shape or np.any(~np.isfinite(wvals)):
            raise QuadratureFailure("weight evaluation returned non-finite values")
        if np.any(wvals < 0):
            raise QuadratureFailure("weight function is negative on the mesh")
        nodes_list.append(x)
        weights_list.append(gw * half * wvals)
    nodes = np.concatenate(nodes_list)
    weights = np.concatenate(weights_list)
    for k_j, w_j in measure.lines:
        if w_j < 0:
            raise QuadratureFailure(f"negative line weight {w_j}")
        nodes = np.append(nodes, k_j)
        weights = np.append(weights, w_j)
    order = np.argsort(nodes, kind="stable")
    nodes, weights = nodes[order], weights[order]
    keep = weights > 0.0
    nodes, weights = nodes[keep], weights[keep]
    if nodes.size == 0:
        raise QuadratureFailure("measure has no positive-weight nodes")
    # collapse numerically coincident nodes (line sitting on a mesh node)
    if nodes.size > 1:
        close = np.diff(nodes) < 1e-15
        if np.any(close):
            merged_n, merged_w = [nodes[0]], [weights[0]]
            for x, w in zip(nodes[1:], weights[1:]):
                if x - merged_n[-1] < 1e-15:
                    merged_w[-1] += w
                else:
                    merged_n.append(x)
                    merged_w.append(w)
            nodes, weights = np.array(merged_n), np.array(merged_w)
    return DiscreteMeasure(nodes, weights)


# ---------------------------------------------------------------------------
# Tridiagonalization of discrete measures
# ---------------------------------------------------------------------------

def stieltjes(measure: DiscreteMeasure, n_max: int,
              cross_check: RecurrenceCoefficients | None = None,
              cross_tol: float = 1e-8) -> RecurrenceCoefficients:
    """Discretized Stieltjes iteration (moments via the running polynomials).

    Fast and exact in exact arithmetic, but loses digits on strongly graded
    measures; `cross_check` compares against an independently computed set
    (normally the Lanczos result) and raises Breakdown when more than half the
    significant digits are gone.
    """
    m = measure.size
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    if n_max > m:
        raise InvalidParameter(f"need at least n_max={n_max} nodes, measure has {m}")
    x, w = measure.nodes, measure.weights
    alpha = np.empty(n_max)
    beta = np.empty(n_max)
    beta[0] = w.sum()
    pi_prev = np.zeros(m)
    pi_cur = np.ones(m)
    norm_cur = beta[0]
    for n in range(n_max):
        alpha[n] = float((w * x * pi_cur**2).sum() / norm_cur)
        if n == n_max - 1:
            break
        pi_next = (x - alpha[n]) * pi_cur - (beta[n] if n >= 1 else 0.0) * pi_prev
        norm_next = float((w * pi_next**2).sum())
        if not np.isfinite(norm_next) or norm_next <= 0.0:
            raise Breakdown(
                f"Stieltjes norm collapsed at n={n + 1} (got {norm_next}); "
                "measure too strongly graded for double precision")
        beta[n + 1] = norm_next / norm_cur
        pi_prev, pi_cur, norm_cur = pi_cur, pi_next, norm_next
    rc = RecurrenceCoefficients(alpha, beta, n_max, "stieltjes")
    if cross_check is not None:
        k = min(n_max, cross_check.n_max)
        da = np.max(np.abs(rc.alpha[:k] - cross_check.alpha[:k])
                    / np.maximum(np.abs(cross_check.alpha[:k]), 1e-300))
        db = np.max(np.abs(rc.beta[1:k] - cross_check.beta[1:k])
                    / np.maximum(np.abs(cross_check.beta[1:k]), 1e-300))
        if max(da, db) > cross_tol:
            raise Breakdown(
                f"Stieltjes deviates from cross-check by {max(da, db):.2e} "
                f"(> {cross_tol:.0e}): lost more than half its digits")
    return rc


def lanczos_rkpw(measure: DiscreteMeasure, n_max: int) -> RecurrenceCoefficients:
    """Lanczos tridiagonalization of diag(nodes) with weight vector sqrt(w).

    Rutishauser-Kahan-Pal-Walker update: each node is folded into the growing
    tridiagonal matrix by a sweep of elementary orthogonal transformations,
    which keeps relative accuracy even on geometrically graded measures where
    the plain iteration breaks down.  Nodes are folded in descending order;
    feeding the large scales first is what preserves the relative accuracy of
    the diagonal entries on graded measures.
    """
    m = measure.size
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    if n_max > m:
        raise InvalidParameter(f"need at least n_max={n_max} nodes, measure has {m}")
    alpha, beta = _rkpw_kernel(measure.nodes[::-1].tolist(),
                               measure.weights[::-1].tolist(), m)
    alpha = np.array(alpha[:n_max])
    beta = np.array(beta[:n_max])
    if np.any(~np.isfinite(beta)) or np.any(beta[1:] <= 0.0):
        raise Breakdown("Lanczos produced nonpositive beta")
    return RecurrenceCoefficients(alpha, beta, n_max, "lanczos")


def _rkpw_kernel(x: list, w: list, m: int) -> tuple[list, list]:
    # python lists: the k-sweep is sequential and list indexing is ~3x faster
    # than numpy scalar indexing here
    p0 = list(x)
    p1 = [0.0] * m
    p1[0] = w[0]
    for n in range(m - 1):
        pn = w[n + 1]
        gam = 1.0
        sig = 0.0
        t = 0.0
        xlam = x[n + 1]
        for k in range(n + 2):
            p1k = p1[k]
            rho = p1k + pn
            tmp = gam * rho
            tsig = sig
            if rho <= 0.0:
                gam = 1.0
                sig = 0.0
            else:
                gam = p1k / rho
                sig = pn / rho
            tk = sig * (p0[k] - xlam) - gam * t
            p0[k] -= tk - t
            t = tk
            if sig <= 0.0:
                pn = tsig * p1k
            else:
                pn = tk * tk / sig
            p1[k] = tmp
    return p0, p1


def measure_to_recurrence(measure: UnitMeasure, n_coeffs: int,
                          method: str = "lanczos",
                          n_intervals: int = 32,
                          tol: float = 1e-12,
                          max_nodes: int = 2**14) -> RecurrenceCoefficients:
    """Discretize a unit measure and tridiagonalize, refining the quadrature
    (doubling nodes per interval) until the requested coefficients are stable
    to `tol` relative, capped at `max_nodes` total nodes."""
    if method not in ("lanczos", "stieltjes"):
        raise InvalidParameter(f"unknown method {method!r}")
    solver = lanczos_rkpw if method == "lanczos" else stieltjes
    npi = 8
    while n_intervals * npi < n_coeffs + 1:
        npi *= 2
    prev = None
    while True:
        disc = quadrature_discretize(measure, n_intervals, npi)
        if disc.size < n_coeffs:
            raise InvalidParameter(
                f"discretization produced {disc.size} nodes < n_coeffs={n_coeffs}; "
                "weight may be zero almost everywhere")
        rc = solver(disc, n_coeffs)
        if prev is not None:
            change = max(
                float(np.max(np.abs(rc.alpha - prev.alpha)
                             / np.maximum(np.abs(prev.alpha), 1e-300))),
                float(np.max(np.abs(rc.beta - prev.beta)
                             / np.maximum(np.abs(prev.beta), 1e-300))))
            if change < tol:
                return rc
        prev = rc
        if n_intervals * (2 * npi) > max_nodes:
            warnings.warn(
                f"quadrature refinement hit the {max_nodes}-node cap before "
                f"reaching tol={tol:g}; returning the finest level", stacklevel=2)
            return rc
        npi *= 2


# ---------------------------------------------------------------------------
# High-precision moment oracle (test fixture, not a production path)
# ---------------------------------------------------------------------------

def moment_oracle(measure: DiscreteMeasure, n_small: int) -> RecurrenceCoefficients:
    """Hankel-determinant route at 40 significant digits.

    Moments mu_r of the measure feed determinant ratios: beta_n from the
    Hankel sequence, alpha_n from the column-shifted variant.  Exponentially
    ill-conditioned, hence the n_small <= 8 guard; a vanishing determinant
    means the measure supports fewer polynomials and truncates the output.
    """
    if n_small < 1 or n_small > 8:
        raise InvalidParameter("moment oracle is limited to n_small in [1, 8]")
    if n_small > measure.size:
        n_small = measure.size
    with mpmath.workdps(40):
        x = [mpmath.mpf(v) for v in measure.nodes]
        w = [mpmath.mpf(v) for v in measure.weights]
        mu = []
        powers = [mpmath.mpf(1) for _ in x]
        for _ in range(2 * n_small + 2):
            mu.append(sum(wi * p for wi, p in zip(w, powers)))
            powers = [p * xi for p, xi in zip(powers, x)]

        def hankel_det(n: int) -> mpmath.mpf:
            if n < 0:
                return mpmath.mpf(1)
            mat = mpmath.matrix([[mu[i + j] for j in range(n + 1)]
                                 for i in range(n + 1)])
            return mpmath.det(mat)

        def shifted_det(n: int) -> mpmath.mpf:
            # columns 0..n-1, n+1 (skip n)
            cols = list(range(n)) + [n + 1]
            mat = mpmath.matrix([[mu[i + j] for j in cols]
                                 for i in range(n + 1)])
            return mpmath.det(mat)

        alpha = []
        beta = []
        dets = [hankel_det(-1), hankel_det(0)]  # Delta_{-1}, Delta_0
        beta.append(float(mu[0]))
        alpha.append(float(shifted_det(0) / dets[1]))
        for n in range(1, n_small):
            dn = hankel_det(n)
            b = dn * dets[-2] / dets[-1] ** 2
            if b <= 0:
                if abs(b) < mpmath.mpf("1e-20"):
                    break  # measure exhausted: fewer support points than asked
                raise Breakdown(f"negative Hankel determinant ratio at n={n}")
            if b < mpmath.mpf("1e-20"):
                break
            dets.append(dn)
            beta.append(float(b))
            alpha.append(float(shifted_det(n) / dn
                               - shifted_det(n - 1) / dets[-2]))
    k = len(alpha)
    return RecurrenceCoefficients(np.array(alpha), np.array(beta), k,
                                  "moment_oracle")
