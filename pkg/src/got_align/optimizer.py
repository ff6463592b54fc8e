"""Stochastic alignment of two graphs.

The assignment is parameterised as ``A_tau(eta + sigma * eps)`` with
``eps ~ N(0, 1)`` entry-wise; ``(eta, sigma)`` are fitted by AMSGrad on the
sample-averaged alignment cost. Gradients are computed by a hand-written
reverse pass through the unrolled Dykstra iterations, the congruence
``P L2 P^T``, the shifted inverse and the trace of the matrix square root.
"""

from dataclasses import asdict, dataclass, field, replace
from typing import Union

import numpy as np

from .assignment import (
    DykstraConfig,
    SoftAssignment,
    dykstra_backward,
    dykstra_forward,
    dykstra_project,
    resolve_kmax,
    round_to_hard,
)
from .errors import DegenerateSpectrum, DimensionMismatch, NonFinite, SingularAfterShift, ValidationError
from .graph import DEFAULT_ALPHA, graph_distribution, laplacian
from .linalg import eigh, from_eig, mT, spectral_function_vjp, sym
from .wasserstein import graph_alignment_cost, l2_alignment_cost

__all__ = [
    "OBJECTIVES",
    "AlignConfig",
    "OptimizerState",
    "AlignmentResult",
    "initialize_state",
    "sample_loss",
    "sample_loss_gradient",
    "amsgrad_step",
    "align",
    "align_pair",
]

OBJECTIVES = ("wasserstein", "l2")

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class AlignConfig:
    """Hyper-parameters of :func:`align`. Defaults follow the published setup."""

    tau: float = 3.0
    gamma: float = 1.0
    samples: int = 10
    sgd_iters: int = 1000
    dykstra_iters: int = 20
    k_max: Union[int, str] = "auto"
    alpha: float = DEFAULT_ALPHA
    seed: int = 0
    objective: str = "wasserstein"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        for name in ("tau", "gamma", "alpha"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("samples", "sgd_iters", "dykstra_iters"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if int(self.seed) < 0:
            raise ValidationError("seed must be non-negative")
        if not (self.k_max == "auto" or (isinstance(self.k_max, (int, np.integer)) and self.k_max >= 1)):
            raise ValidationError(f"k_max must be a positive integer or 'auto', got {self.k_max!r}")

    def dykstra_config(self):
        return DykstraConfig(tau=self.tau, max_iter=self.dykstra_iters)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class OptimizerState:
    """Variational parameters and AMSGrad accumulators.

    ``m``, ``v`` and ``v_hat`` stack the ``eta`` and ``sigma`` slots along
    the first axis (shape ``(2, r, c)``).
    """

    eta: np.ndarray
    sigma: np.ndarray
    m: np.ndarray
    v: np.ndarray
    v_hat: np.ndarray
    step: int = 0


def initialize_state(r, c, seed):
    """Standard-normal ``eta``, unit ``sigma``, zero moments."""
    if r < 1 or c < r:
        raise DimensionMismatch(f"need 1 <= r <= c, got r={r}, c={c}")
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((r, c))
    zeros = np.zeros((2, r, c))
    return OptimizerState(eta, np.ones((r, c)), zeros, zeros.copy(), zeros.copy(), 0)


def amsgrad_step(state, grads, gamma):
    """One AMSGrad update (no bias correction) of ``(eta, sigma)``."""
    g = np.stack([np.asarray(grads[0], dtype=float), np.asarray(grads[1], dtype=float)])
    if g.shape != state.m.shape:
        raise DimensionMismatch(f"gradient shape {g.shape[1:]} != parameter shape {state.eta.shape}")
    m = BETA1 * state.m + (1.0 - BETA1) * g
    v = BETA2 * state.v + (1.0 - BETA2) * g * g
    v_hat = np.maximum(state.v_hat, v)
    delta = gamma * m / (np.sqrt(v_hat) + ADAM_EPS)
    return OptimizerState(
        state.eta - delta[0], state.sigma - delta[1], m, v, v_hat, state.step + 1
    )


class _Objective:
    """Batched alignment cost of ``A_tau(X)`` and its gradient in ``X``."""

    def __init__(self, g1, g2, cfg, k_max=None):
        if g1.n > g2.n:
            raise DimensionMismatch(f"g1 must be the smaller graph ({g1.n} > {g2.n})")
        self.r, self.c = g1.n, g2.n
        self.k_max = resolve_kmax(cfg.k_max if k_max is None else k_max, self.r, self.c)
        self.dcfg = cfg.dykstra_config()
        self.alpha = cfg.alpha
        self.kind = cfg.objective
        self.L1 = laplacian(g1)
        self.L2 = laplacian(g2)
        if self.kind == "wasserstein":
            d1 = graph_distribution(g1, cfg.alpha)
            self.root1 = d1.sqrt_covariance
            self.trace1 = float(np.trace(d1.covariance))

    def __call__(self, X, grad=True):
        X = np.asarray(X, dtype=float)
        if X.shape[-2:] != (self.r, self.c):
            raise DimensionMismatch(f"parameter shape {X.shape[-2:]} != ({self.r}, {self.c})")
        P, tape = dykstra_forward(X, self.k_max, self.dcfg, record=grad)
        PL = P @ self.L2
        M = sym(PL @ mT(P))
        if self.kind == "l2":
            E = self.L1 - M
            loss = np.sum(E * E, axis=(-2, -1))
            if not grad:
                return loss
            gP = -4.0 * E @ PL
        else:
            loss, gM = self._wasserstein(M, grad)
            if not grad:
                return loss
            gP = 2.0 * gM @ PL
        return loss, dykstra_backward(tape, gP)

    def _wasserstein(self, M, grad):
        eye = np.eye(self.r)
        a, V = eigh(M + self.alpha * eye)
        if np.any(a[..., 0] < 1e-12):
            raise SingularAfterShift("aligned Laplacian + alpha*I is singular")
        cov2 = from_eig(V, 1.0 / a)
        B = sym(self.root1 @ cov2 @ self.root1)
        b, U = eigh(B)
        scale = np.maximum(1.0, b[..., -1])
        if np.any(b[..., 0] <= 1e-12 * scale):
            raise DegenerateSpectrum("Bures matrix is numerically singular; sqrt is not differentiable")
        root_b = np.sqrt(b)
        loss = self.trace1 + np.sum(1.0 / a, axis=-1) - 2.0 * np.sum(root_b, axis=-1)
        if not grad:
            return loss, None
        # d(-2 Tr sqrt(B)) through the eigendecomposition of B
        gB = spectral_function_vjp(U, b, root_b, 0.5 / root_b, -2.0 * np.broadcast_to(eye, B.shape))
        g_cov2 = eye + self.root1 @ gB @ self.root1
        gM = -sym(cov2 @ g_cov2 @ cov2)
        return loss, gM


def _perturb(eta, sigma, eps):
    return np.asarray(eta, dtype=float) + np.asarray(sigma, dtype=float) * np.asarray(eps, dtype=float)


def sample_loss(eta, sigma, eps, g1, g2, cfg):
    """Alignment cost of ``A_tau(eta + sigma * eps)`` for one noise draw."""
    objective = _Objective(g1, g2, cfg)
    return float(objective(_perturb(eta, sigma, eps), grad=False))


def sample_loss_gradient(eta, sigma, eps, g1, g2, cfg):
    """Exact gradient of :func:`sample_loss` with respect to ``(eta, sigma)``."""
    objective = _Objective(g1, g2, cfg)
    _, gX = objective(_perturb(eta, sigma, eps))
    return gX, gX * np.asarray(eps, dtype=float)


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Output of :func:`align`.

    ``cost`` is the configured objective at the soft assignment
    ``A_tau(eta)``; ``w2``/``l2`` and their ``hard_`` counterparts report
    both objectives on the soft and the rounded assignment.
    """

    soft: SoftAssignment
    hard: SoftAssignment
    cost: float
    w2: float
    l2: float
    hard_w2: float
    hard_l2: float
    losses: np.ndarray
    config: AlignConfig
    k_max: int
    sigma: np.ndarray = field(repr=False)
    swapped: bool = False

    @property
    def distance(self):
        return self.w2

    @property
    def seed(self):
        return self.config.seed

    def to_dict(self):
        return {
            "kind": "alignment",
            "config": self.config.to_dict(),
            "seed": int(self.config.seed),
            "k_max": int(self.k_max),
            "swapped": bool(self.swapped),
            "shape": list(self.soft.shape),
            "cost": float(self.cost),
            "w2": float(self.w2),
            "l2": float(self.l2),
            "hard_w2": float(self.hard_w2),
            "hard_l2": float(self.hard_l2),
            "losses": [float(x) for x in self.losses],
            "soft_assignment": self.soft.matrix.tolist(),
            "hard_assignment": self.hard.matrix.tolist(),
            "sigma": self.sigma.tolist(),
        }


def _noise_rng(seed):
    return np.random.default_rng(np.random.SeedSequence([int(seed), 1]))


def align(g1, g2, cfg=None, callback=None):
    """Fit a one-to-many assignment of ``g1`` (smaller) onto ``g2``.

    Parameters
    ----------
    g1, g2 : Graph
        ``g1.n <= g2.n``; use :func:`align_pair` to order arbitrary inputs.
    cfg : AlignConfig, optional
    callback : callable, optional
        Called as ``callback(iteration, loss, state)`` after every update.

    Returns
    -------
    AlignmentResult
    """
    cfg = cfg or AlignConfig()
    objective = _Objective(g1, g2, cfg)
    r, c = objective.r, objective.c
    state = initialize_state(r, c, cfg.seed)
    rng = _noise_rng(cfg.seed)
    S = int(cfg.samples)
    losses = np.empty(int(cfg.sgd_iters))
    for it in range(int(cfg.sgd_iters)):
        eps = rng.standard_normal((S, r, c))
        loss, gX = objective(state.eta + state.sigma * eps)
        J = float(np.mean(loss))
        if not np.isfinite(J) or not np.all(np.isfinite(gX)):
            raise NonFinite(f"non-finite loss or gradient at iteration {it}", iteration=it)
        losses[it] = J
        state = amsgrad_step(state, (gX.mean(axis=0), (gX * eps).mean(axis=0)), cfg.gamma)
        if callback is not None:
            callback(it, J, state)
    soft = dykstra_project(state.eta, objective.k_max, objective.dcfg)
    hard = round_to_hard(soft)
    w2 = graph_alignment_cost(g1, g2, soft, cfg.alpha)
    l2 = l2_alignment_cost(g1, g2, soft)
    return AlignmentResult(
        soft=soft,
        hard=hard,
        cost=w2 if cfg.objective == "wasserstein" else l2,
        w2=w2,
        l2=l2,
        hard_w2=graph_alignment_cost(g1, g2, hard, cfg.alpha),
        hard_l2=l2_alignment_cost(g1, g2, hard),
        losses=losses,
        config=cfg,
        k_max=objective.k_max,
        sigma=state.sigma,
    )


def align_pair(ga, gb, cfg=None, callback=None):
    """:func:`align` with the smaller graph moved to the first slot."""
    if ga.n > gb.n:
        return replace(align(gb, ga, cfg, callback), swapped=True)
    return align(ga, gb, cfg, callback)
