"""Fixed-point proximal splitting solver for enhanced-penalty models.

The solver iterates an averaged nonexpansive map T on triples (x, v, w):

    x+ = [I - (1/sigma)(A^T A - mu L^T B^T B L)] x
         - (mu/sigma) L^T B^T B v - (mu/sigma) L^T w + (1/sigma) A^T y
    v+ = prox_{(mu/tau) psi} [ (2mu/tau) B^T B L x+ - (mu/tau) B^T B L x
                               + (I - (mu/tau) B^T B) v ]
    w+ = prox_{psi^*} ( 2 L x+ - L x + w )

Under the step-size condition

    sigma I - (kappa/2) A^T A - mu L^T L > 0,
    tau >= (kappa/2 + 2/kappa) mu ||B||_op^2         (kappa > 1)

the block metric

    P = [[ sigma I, -mu L^T B^T B, -mu L^T ],
         [ -mu B^T B L, tau I, 0 ],
         [ -mu L, 0, mu I ]]

is positive definite, T is kappa/(2 kappa - 1)-averaged in the P-metric,
and the plain (or relaxed Krasnoselskii-Mann) iteration converges to a
fixed point whose x-component is a global minimizer of the convex model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linops import LinearOperator, op_norm
from .model import InnerSolveConfig, Problem, certify_convexity, objective
from .penalties import soft_threshold

__all__ = [
    "FixedPointMap",
    "SolverConfig",
    "SolverState",
    "SolveResult",
    "PMetric",
    "auto_step_sizes",
    "t_step",
    "solve",
    "selesnick_solve",
]

_DENSE_CAP = 2048  # above this dimension, fall back to matrix-free paths


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes and stopping policy for :func:`solve`.

    ``sigma`` and ``tau`` default to the safe automatic choice of
    :func:`auto_step_sizes`; explicit values are validated against the
    step-size condition before use. ``relaxation`` is the constant
    Krasnoselskii-Mann coefficient (1.0 reproduces the plain iteration).
    A ``p_residual_tol`` of 0 disables early stopping and runs exactly
    ``max_iter`` sweeps, which is how fixed-budget experiments are run.
    """

    kappa: float = 1.001
    sigma: float | None = None
    tau: float | None = None
    max_iter: int = 10_000
    p_residual_tol: float = 1e-9
    relaxation: float = 1.0

    def __post_init__(self):
        if not self.kappa > 1.0:
            raise ValueError("kappa must exceed 1")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.p_residual_tol < 0:
            raise ValueError("p_residual_tol must be nonnegative")


@dataclass
class SolverState:
    """The iterated triple (x, v, w) plus an iteration counter."""

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    k: int = 0

    @staticmethod
    def zeros(problem: Problem) -> "SolverState":
        n, l = problem.a.cols, problem.l.rows
        return SolverState(np.zeros(n), np.zeros(l), np.zeros(l))


def _sym_lambda_max(matvec, n: int, tol: float = 1e-11,
                    max_iter: int = 200_000, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD map by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        z = matvec(x)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        lam_new = float(x @ z)
        x = z / nz
        if abs(lam_new - lam) <= tol * max(lam_new, np.finfo(float).tiny):
            return lam_new
        lam = lam_new
    return lam


def _forward_lambda_max(problem: Problem, kappa: float) -> float:
    """lambda_max of (kappa/2) A^T A + mu L^T L, densely when affordable."""
    a, l, mu = problem.a, problem.l, problem.mu
    if a.cols <= _DENSE_CAP:
        ad = a.to_dense()
        ld = l.to_dense()
        m = 0.5 * kappa * (ad.T @ ad) + mu * (ld.T @ ld)
        return float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])
    return _sym_lambda_max(
        lambda x: 0.5 * kappa * a.adjoint_apply(a.apply(x))
        + mu * l.adjoint_apply(l.apply(x)),
        a.cols,
    )


def auto_step_sizes(problem: Problem, kappa: float) -> tuple[float, float]:
    """Step sizes satisfying the step-size condition with margin kappa - 1.

    sigma = ||(kappa/2) A^T A + mu L^T L||_op + (kappa - 1)
    tau   = (kappa/2 + 2/kappa) mu ||B||_op^2 + (kappa - 1)
    """
    if not kappa > 1.0:
        raise ValueError("kappa must exceed 1")
    sigma = _forward_lambda_max(problem, kappa) + (kappa - 1.0)
    b_norm = op_norm(problem.b)
    tau = (0.5 * kappa + 2.0 / kappa) * problem.mu * b_norm ** 2 + (kappa - 1.0)
    return sigma, tau


def _resolve_steps(problem: Problem, cfg: SolverConfig) -> tuple[float, float]:
    if cfg.sigma is None or cfg.tau is None:
        auto_sigma, auto_tau = auto_step_sizes(problem, cfg.kappa)
    sigma = cfg.sigma if cfg.sigma is not None else auto_sigma
    tau = cfg.tau if cfg.tau is not None else auto_tau
    if cfg.sigma is not None or cfg.tau is not None:
        lam = _forward_lambda_max(problem, cfg.kappa)
        slack = 1e-12 * max(1.0, lam)
        if sigma <= lam - slack:
            raise ValueError(
                f"sigma={sigma:g} violates the step-size condition "
                f"(needs > {lam:g})"
            )
        tau_floor = (0.5 * cfg.kappa + 2.0 / cfg.kappa) * problem.mu * op_norm(problem.b) ** 2
        if tau < tau_floor - 1e-12 * max(1.0, tau_floor):
            raise ValueError(
                f"tau={tau:g} violates the step-size condition (needs >= {tau_floor:g})"
            )
    return float(sigma), float(tau)


class PMetric:
    """The positive-definite block metric of the fixed-point iteration.

    Quadratic forms are evaluated blockwise without materializing the
    operator; ``materialize`` builds the dense matrix for the positive
    definiteness check and for small-scale diagnostics.
    """

    def __init__(self, problem: Problem, sigma: float, tau: float):
        self.problem = problem
        self.sigma = float(sigma)
        self.tau = float(tau)
        self._btb = _dense_btb(problem.b)

    def quad(self, x, v, w) -> float:
        """<u, P u> for u = (x, v, w)."""
        p = self.problem
        lx = p.l.apply(x)
        btbv = self._btb(v)
        val = (
            self.sigma * float(x @ x)
            + self.tau * float(v @ v)
            + p.mu * float(w @ w)
            - 2.0 * p.mu * float(lx @ btbv)
            - 2.0 * p.mu * float(lx @ w)
        )
        return val

    def norm(self, x, v, w) -> float:
        return float(np.sqrt(max(self.quad(x, v, w), 0.0)))

    def materialize(self) -> np.ndarray:
        p = self.problem
        n, l = p.a.cols, p.l.rows
        ld = p.l.to_dense()
        bd = p.b.to_dense()
        btb = bd.T @ bd
        top = np.hstack([self.sigma * np.eye(n), -p.mu * ld.T @ btb, -p.mu * ld.T])
        mid = np.hstack([-p.mu * btb @ ld, self.tau * np.eye(l), np.zeros((l, l))])
        bot = np.hstack([-p.mu * ld, np.zeros((l, l)), p.mu * np.eye(l)])
        return np.vstack([top, mid, bot])

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.materialize())
            return True
        except np.linalg.LinAlgError:
            return False


def _dense_btb(b: LinearOperator):
    """v -> B^T B v, as a cached dense product at desk scale."""
    if b.cols <= _DENSE_CAP:
        bd = b.to_dense()
        if not bd.any():
            return None
        btb = bd.T @ bd
        return lambda v: btb @ v
    return lambda v: b.adjoint_apply(b.apply(v))


class _Stepper:
    """One application of the fixed-point map, with operator caching.

    The caches (L x, B^T B L x, B^T B v) let the main loop run with one
    apply of each of A, A^T, L, L^T and two B^T B products per sweep; the
    relaxed update keeps them consistent because all cached quantities are
    linear in the state.
    """

    def __init__(self, problem: Problem, sigma: float, tau: float):
        self.p = problem
        self.sigma = sigma
        self.tau = tau
        self.btb = _dense_btb(problem.b)
        self.aty_over_sigma = problem.a.adjoint_apply(problem.y) / sigma

    def caches(self, x, v):
        lx = self.p.l.apply(x)
        if self.btb is None:
            z = np.zeros(self.p.l.rows)
            return lx, z, z
        return lx, self.btb(lx), self.btb(v)

    def step(self, x, v, w, lx, btb_lx, btb_v):
        """Returns (xi, zeta, eta, L xi, B^T B L xi, B^T B zeta)."""
        p, sigma, tau = self.p, self.sigma, self.tau
        mu = p.mu
        ata_x = p.a.adjoint_apply(p.a.apply(x))
        xi = (
            x
            - ata_x / sigma
            + (mu / sigma) * p.l.adjoint_apply(btb_lx - btb_v - w)
            + self.aty_over_sigma
        )
        l_xi = p.l.apply(xi)
        if self.btb is None:
            btb_lxi = btb_lx  # zeros
            zeta = p.penalty.prox(v, mu / tau)
            btb_zeta = btb_v  # zeros
        else:
            btb_lxi = self.btb(l_xi)
            zeta = p.penalty.prox(
                (mu / tau) * (2.0 * btb_lxi - btb_lx - btb_v) + v, mu / tau
            )
            btb_zeta = self.btb(zeta)
        s = 2.0 * l_xi - lx + w
        eta = s - p.penalty.prox(s, 1.0)
        return xi, zeta, eta, l_xi, btb_lxi, btb_zeta


class FixedPointMap:
    """The fixed-point map as a reusable callable.

    Resolves and validates the step sizes once at construction; each call
    applies one exact sweep of the map to a :class:`SolverState`. Useful
    for fixed-point diagnostics (nonexpansiveness probes, distance traces)
    without paying the validation cost per step.
    """

    def __init__(self, problem: Problem, cfg: SolverConfig | None = None):
        cfg = cfg or SolverConfig()
        self.problem = problem
        self.cfg = cfg
        self.sigma, self.tau = _resolve_steps(problem, cfg)
        self._stepper = _Stepper(problem, self.sigma, self.tau)

    def __call__(self, state: SolverState) -> SolverState:
        s = self._stepper
        lx, btb_lx, btb_v = s.caches(state.x, state.v)
        xi, zeta, eta, *_ = s.step(state.x, state.v, state.w, lx, btb_lx, btb_v)
        return SolverState(xi, zeta, eta, state.k + 1)

    def metric(self) -> "PMetric":
        return PMetric(self.problem, self.sigma, self.tau)


def t_step(problem: Problem, cfg: SolverConfig, state: SolverState) -> SolverState:
    """One exact application of the fixed-point map to ``state``."""
    return FixedPointMap(problem, cfg)(state)


@dataclass
class SolveResult:
    """Final iterate and per-iteration traces of one solver run."""

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    iterations: int
    converged: bool
    p_residuals: np.ndarray
    sigma: float
    tau: float
    se_trace: np.ndarray | None = None
    objectives: np.ndarray | None = None
    certificate: object = None


def solve(problem: Problem, cfg: SolverConfig | None = None,
          init: SolverState | None = None, ground_truth=None,
          track_objective: bool = False,
          inner: InnerSolveConfig | None = None,
          check_convexity: bool = True) -> SolveResult:
    """Run the fixed-point iteration on ``problem``.

    Stops when the P-metric residual ||u_{k+1} - u_k||_P falls below
    ``cfg.p_residual_tol * (1 + ||u_{k+1}||_P)`` or after ``cfg.max_iter``
    sweeps. If ``ground_truth`` is given, the squared error
    ||x_k - truth||^2 is recorded each sweep; ``track_objective`` records
    the (inner-solve based) objective as well, which is much slower.

    ``check_convexity`` runs the eigenvalue certificate first and warns if
    it fails; the iteration still runs, since non-certified models are
    occasionally useful for exploration.
    """
    cfg = cfg or SolverConfig()
    sigma, tau = _resolve_steps(problem, cfg)

    certificate = None
    if check_convexity and problem.a.cols <= 4096:
        certificate = certify_convexity(problem)
        if not certificate.holds:
            warnings.warn(
                f"convexity certificate fails (min_eig={certificate.min_eig:.3e}); "
                "the iteration may not converge to a global minimizer",
                RuntimeWarning,
            )

    state = init or SolverState.zeros(problem)
    x = np.array(state.x, dtype=float)
    v = np.array(state.v, dtype=float)
    w = np.array(state.w, dtype=float)

    stepper = _Stepper(problem, sigma, tau)
    lx, btb_lx, btb_v = stepper.caches(x, v)
    mu = problem.mu
    alpha = cfg.relaxation

    p_res = np.empty(cfg.max_iter)
    se = np.empty(cfg.max_iter) if ground_truth is not None else None
    objs = np.empty(cfg.max_iter) if track_objective else None
    truth = None if ground_truth is None else np.asarray(ground_truth, dtype=float)

    converged = False
    k = 0
    for k in range(1, cfg.max_iter + 1):
        xi, zeta, eta, l_xi, btb_lxi, btb_zeta = stepper.step(
            x, v, w, lx, btb_lx, btb_v
        )
        if alpha == 1.0:
            x_new, v_new, w_new = xi, zeta, eta
            lx_new, btb_lx_new, btb_v_new = l_xi, btb_lxi, btb_zeta
        else:
            x_new = (1 - alpha) * x + alpha * xi
            v_new = (1 - alpha) * v + alpha * zeta
            w_new = (1 - alpha) * w + alpha * eta
            lx_new = (1 - alpha) * lx + alpha * l_xi
            btb_lx_new = (1 - alpha) * btb_lx + alpha * btb_lxi
            btb_v_new = (1 - alpha) * btb_v + alpha * btb_zeta

        dx = x_new - x
        dv = v_new - v
        dw = w_new - w
        d_lx = lx_new - lx
        d_btb_v = btb_v_new - btb_v
        res_sq = (
            sigma * float(dx @ dx)
            + tau * float(dv @ dv)
            + mu * float(dw @ dw)
            - 2.0 * mu * float(d_lx @ d_btb_v)
            - 2.0 * mu * float(d_lx @ dw)
        )
        residual = np.sqrt(max(res_sq, 0.0))
        if not np.isfinite(residual):
            raise FloatingPointError(
                f"solver state became non-finite at iteration {k}; "
                "check the step sizes and the convexity certificate"
            )
        p_res[k - 1] = residual

        x, v, w = x_new, v_new, w_new
        lx, btb_lx, btb_v = lx_new, btb_lx_new, btb_v_new

        if se is not None:
            d = x - truth
            se[k - 1] = float(d @ d)
        if objs is not None:
            objs[k - 1] = objective(problem, x, inner)

        if cfg.p_residual_tol > 0:
            norm_sq = (
                sigma * float(x @ x)
                + tau * float(v @ v)
                + mu * float(w @ w)
                - 2.0 * mu * float(lx @ btb_v)
                - 2.0 * mu * float(lx @ w)
            )
            u_norm = np.sqrt(max(norm_sq, 0.0))
            if residual <= cfg.p_residual_tol * (1.0 + u_norm):
                converged = True
                break

    if not np.all(np.isfinite(x)):
        raise FloatingPointError("solver returned a non-finite estimate")

    return SolveResult(
        x=x, v=v, w=w, iterations=k, converged=converged,
        p_residuals=p_res[:k],
        sigma=sigma, tau=tau,
        se_trace=None if se is None else se[:k],
        objectives=None if objs is None else objs[:k],
        certificate=certificate,
    )


def selesnick_solve(a: LinearOperator, b: LinearOperator, y, mu: float,
                    theta: float, init: tuple | None = None,
                    tau: float | None = None, max_iter: int = 50_000,
                    tol: float = 1e-12) -> SolveResult:
    """Forward-backward baseline for the l1 model with B^T B = (theta/mu) A^T A.

    Iterates, from (x, v),

        x+ = prox_{tau mu l1} [ x - tau A^T (A (x + theta (v - x)) - y) ]
        v+ = prox_{tau mu l1} [ v - tau theta A^T A (v - x) ]

    with step tau in (0, 2 / (max{1, theta/(1-theta)} sqrt(rho(A^T A)))).
    The default tau is 0.9 times that upper bound, with rho(A^T A) taken
    as op_norm(A)^2; pass tau explicitly for operators far from unit
    spectral norm. Serves as an independent oracle for :func:`solve` on
    this special case.
    """
    y = np.asarray(y, dtype=float)
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    if mu <= 0:
        raise ValueError("mu must be positive")
    ad = a.to_dense()
    ata = ad.T @ ad
    bd = b.to_dense()
    btb = bd.T @ bd
    scale = max(np.linalg.norm(ata), 1.0)
    if np.linalg.norm(btb - (theta / mu) * ata) > 1e-8 * scale:
        raise ValueError("B^T B must equal (theta/mu) A^T A for this baseline")

    rho = op_norm(a) ** 2
    bound = 2.0 / (max(1.0, theta / (1.0 - theta)) * np.sqrt(rho))
    if tau is None:
        tau = 0.9 * bound
    elif not 0.0 < tau < bound:
        raise ValueError(f"tau must lie in (0, {bound:g})")

    n = a.cols
    if init is None:
        x = np.zeros(n)
        v = np.zeros(n)
    else:
        x = np.array(init[0], dtype=float)
        v = np.array(init[1], dtype=float)

    at_y = ad.T @ y
    converged = False
    k = 0
    residuals = np.empty(max_iter)
    for k in range(1, max_iter + 1):
        ata_x = ata @ x
        ata_v = ata @ v
        x_new = soft_threshold(
            x - tau * ((1.0 - theta) * ata_x + theta * ata_v - at_y), tau * mu
        )
        v_new = soft_threshold(v - tau * theta * (ata_v - ata_x), tau * mu)
        residual = np.sqrt(
            float((x_new - x) @ (x_new - x)) + float((v_new - v) @ (v_new - v))
        )
        if not np.isfinite(residual):
            raise FloatingPointError(f"baseline diverged at iteration {k}")
        residuals[k - 1] = residual
        scale_u = 1.0 + np.sqrt(float(x @ x) + float(v @ v))
        x, v = x_new, v_new
        if residual <= tol * scale_u:
            converged = True
            break

    return SolveResult(
        x=x, v=v, w=np.zeros(0), iterations=k, converged=converged,
        p_residuals=residuals[:k], sigma=0.0, tau=float(tau),
    )
