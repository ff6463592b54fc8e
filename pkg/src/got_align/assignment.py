"""One-to-many assignment matrices and the entropic projections onto them.

A soft assignment ``P`` of shape ``(r, c)`` with ``r <= c`` has entries in
``[0, 1]``, unit column sums, and row sums in ``[1, k_max]``. The Dykstra
operator maps an arbitrary real matrix onto that set by alternating KL
projections of ``exp(X / tau)``; for square inputs with ``k_max = 1`` it
coincides with Sinkhorn scaling.

The projection functions accept stacked inputs of shape ``(..., r, c)``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleKmax, Overflow, ValidationError, ZeroColumn, ZeroRow

log = logging.getLogger(__name__)

__all__ = [
    "DykstraConfig",
    "SoftAssignment",
    "kmax_bounds",
    "covering_kmax",
    "validate_kmax",
    "resolve_kmax",
    "kl_project_rows",
    "kl_project_cols",
    "dykstra_project",
    "sinkhorn_project",
    "round_to_hard",
    "DykstraTape",
    "dykstra_forward",
    "dykstra_backward",
]


@dataclass(frozen=True)
class DykstraConfig:
    tau: float = 3.0
    max_iter: int = 20
    convergence_tol: float = 1e-9
    underflow_floor: float = 1e-300

    def __post_init__(self):
        if not self.tau > 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if int(self.max_iter) < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.convergence_tol > 0 or not self.underflow_floor > 0:
            raise ValidationError("convergence_tol and underflow_floor must be positive")


def kmax_bounds(r, c):
    """Admissible range ``1 <= k_max <= 1 + c - r`` of the row capacity."""
    if r < 1 or c < r:
        raise InfeasibleKmax(f"need 1 <= r <= c, got r={r}, c={c}")
    return 1, 1 + c - r


def covering_kmax(r, c):
    """Smallest ``k_max`` whose rows can hold all ``c`` columns: ``ceil(c / r)``.

    Below it the hard (and soft) constraint sets are empty; the projections
    still run but their output cannot satisfy both row and column sums.
    """
    return -(-c // r)


def validate_kmax(r, c, k_max):
    """True iff ``1 <= k_max <= 1 + c - r``."""
    try:
        lo, hi = kmax_bounds(r, c)
    except InfeasibleKmax:
        return False
    return lo <= k_max <= hi


def resolve_kmax(k_max, r, c):
    """Turn ``"auto"`` into the upper bound and check the admissible range."""
    lo, hi = kmax_bounds(r, c)
    if k_max is None or k_max == "auto":
        return hi
    try:
        k = int(k_max)
    except (TypeError, ValueError):
        raise InfeasibleKmax(f"k_max must be an integer or 'auto', got {k_max!r}") from None
    if not isinstance(k_max, str) and k != k_max:
        raise InfeasibleKmax(f"k_max must be an integer or 'auto', got {k_max!r}")
    if not lo <= k <= hi:
        raise InfeasibleKmax(
            f"k_max={k} is infeasible for a {r}x{c} assignment: need "
            f"{lo} <= k_max <= 1 + |V2| - |V1| = {hi}"
        )
    if k < covering_kmax(r, c):
        log.warning(
            "k_max=%d < ceil(%d/%d) = %d: no assignment can cover every column; "
            "rounding will exceed k_max", k, c, r, covering_kmax(r, c),
        )
    return k


@dataclass(frozen=True, eq=False)
class SoftAssignment:
    """Row/column constrained matrix mapping the smaller graph onto the larger one."""

    matrix: np.ndarray
    k_max: int

    def __post_init__(self):
        P = np.array(self.matrix, dtype=float, copy=True)
        if P.ndim != 2:
            raise ValidationError(f"assignment must be 2-D, got shape {P.shape}")
        P.setflags(write=False)
        object.__setattr__(self, "matrix", P)
        object.__setattr__(self, "k_max", int(self.k_max))

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_hard(self):
        return bool(np.all((self.matrix == 0) | (self.matrix == 1)))

    def violations(self):
        """Worst-case violation of each constraint family (0 when satisfied)."""
        P = self.matrix
        rows = P.sum(axis=1)
        return {
            "entries": float(max(0.0, -P.min(), P.max() - 1.0)),
            "columns": float(np.max(np.abs(P.sum(axis=0) - 1.0))),
            "rows": float(max(0.0, 1.0 - rows.min(), rows.max() - self.k_max)),
        }

    def is_feasible(self, entry_tol=1e-6, col_tol=1e-4, row_tol=1e-4):
        v = self.violations()
        return v["entries"] <= entry_tol and v["columns"] <= col_tol and v["rows"] <= row_tol

    def column_owners(self):
        """Row index holding the largest entry of every column."""
        return np.argmax(self.matrix, axis=0)


def kl_project_rows(Xi, k_max, underflow_floor=1e-300):
    """KL projection onto ``{row sums in [1, k_max]}``: rescale out-of-range rows."""
    return _project_rows(np.asarray(Xi, dtype=float), k_max, underflow_floor)[0]


def _project_rows(Y, k_max, floor):
    s = Y.sum(axis=-1)
    if np.any(s < floor):
        raise ZeroRow("a row sum underflowed; tau is too small for the input scale")
    f = np.clip(s, 1.0, k_max) / s
    return Y * f[..., :, None], s, f


def kl_project_cols(Xi, underflow_floor=1e-300):
    """KL projection onto ``{column sums = 1}``."""
    return _project_cols(np.asarray(Xi, dtype=float), underflow_floor)[0]


def _project_cols(Y, floor):
    s = Y.sum(axis=-2)
    if np.any(s < floor):
        raise ZeroColumn("a column sum underflowed; tau is too small for the input scale")
    return Y / s[..., None, :], s


def _kernel(X, tau):
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValidationError("input matrix contains NaN or inf")
    with np.errstate(over="ignore", invalid="ignore"):
        Z = X / tau
    if not np.all(np.isfinite(Z)):
        raise Overflow("X / tau exceeds the floating-point range; rescale the input or raise tau")
    flat = Z.reshape(Z.shape[:-2] + (-1,))
    arg = np.argmax(flat, axis=-1)
    shift = np.take_along_axis(flat, arg[..., None], axis=-1)[..., None]
    return np.exp(Z - shift), arg


@dataclass
class DykstraTape:
    """Forward record of the Dykstra iterations for the reverse pass."""

    X_shape: tuple
    tau: float
    k_max: int
    floor: float
    argmax: np.ndarray
    steps: list
    output: np.ndarray

    @property
    def n_iter(self):
        return len(self.steps)


def dykstra_forward(X, k_max, cfg, record=False):
    """Run the Dykstra iterations on ``exp(X / tau)`` (stacked inputs allowed).

    Each step ``t`` projects ``P[t] * Q[t-1]`` onto the row set (even ``t``)
    or the column set (odd ``t``) and refreshes the correction
    ``Q[t+1] = Q[t-1] * P[t] / P[t+1]``. Iteration stops after ``max_iter``
    steps or, after a column step, when both the row step and the column
    step moved the iterate by less than ``convergence_tol`` in max norm.

    Returns the final iterate and, with ``record=True``, a :class:`DykstraTape`.
    """
    floor = cfg.underflow_floor
    P, arg = _kernel(X, cfg.tau)
    q_old = np.ones_like(P)  # Q[t-1]
    q_cur = np.ones_like(P)  # Q[t]
    last_change = np.inf
    steps = []
    for t in range(int(cfg.max_iter)):
        Y = P * q_old
        if t % 2 == 0:
            P_new, s, f = _project_rows(Y, k_max, floor)
            aux = (s, f)
        else:
            P_new, s = _project_cols(Y, floor)
            aux = (s,)
        denom = np.maximum(P_new, floor)
        Q_new = q_old * P / denom
        if record:
            steps.append((P, q_old, Y, P_new, denom, aux))
        change = np.max(np.abs(P_new - P))
        q_old, q_cur = q_cur, Q_new
        P = P_new
        if t % 2 == 1 and max(change, last_change) < cfg.convergence_tol:
            break
        last_change = change
    tape = None
    if record:
        tape = DykstraTape(np.shape(X), cfg.tau, k_max, floor, arg, steps, P)
    return P, tape


def dykstra_backward(tape, grad_out):
    """Vector-Jacobian product of :func:`dykstra_forward` with respect to ``X``."""
    gP = np.array(grad_out, dtype=float, copy=True)
    g_q_cur = np.zeros_like(gP)  # cotangent of Q[t+1]
    g_q_old = np.zeros_like(gP)  # cotangent of Q[t]
    for t in range(len(tape.steps) - 1, -1, -1):
        P, q_old, Y, P_new, denom, aux = tape.steps[t]
        # Q[t+1] = Q[t-1] * P[t] / max(P[t+1], floor)
        gQn = g_q_cur
        g_qprev = gQn * P / denom
        gP_t = gQn * q_old / denom
        # split the quotient so denom**2 cannot underflow to zero
        gPn = gP - np.where(P_new > tape.floor, gP_t * (P / denom), 0.0)
        if t % 2 == 0:
            s, f = aux
            k = tape.k_max
            # f = clip(s, 1, k) / s, so df/ds = -f / s off the flat part;
            # weighted means of gPn avoid forming s**2
            active = (s < 1.0) | (s > k)
            mean = np.sum(gPn * (Y / s[..., :, None]), axis=-1)
            gY = f[..., :, None] * (gPn - np.where(active, mean, 0.0)[..., :, None])
        else:
            (s,) = aux
            mean = np.sum(gPn * (Y / s[..., None, :]), axis=-2)
            gY = (gPn - mean[..., None, :]) / s[..., None, :]
        gP_t = gP_t + gY * q_old
        g_qprev = g_qprev + gY * P
        # Q[t] passes through step t untouched; it becomes the "new" slot one step back.
        gP, g_q_cur, g_q_old = gP_t, g_q_old, g_qprev
    P0 = tape.steps[0][0] if tape.steps else tape.output
    gZ = gP * P0
    gX = gZ / tape.tau
    # the subtracted maximum is a function of X as well
    flat = gX.reshape(gX.shape[:-2] + (-1,))
    total = gZ.reshape(flat.shape).sum(axis=-1, keepdims=True) / tape.tau
    np.put_along_axis(
        flat,
        tape.argmax[..., None],
        np.take_along_axis(flat, tape.argmax[..., None], axis=-1) - total,
        axis=-1,
    )
    return flat.reshape(tape.X_shape)


def dykstra_project(X, k_max, cfg=None):
    """Entropic projection of ``X`` onto the soft one-to-many assignments.

    Parameters
    ----------
    X : array_like, shape (r, c)
        Real score matrix, ``r <= c``.
    k_max : int
        Maximum number of columns per row.
    cfg : DykstraConfig, optional

    Returns
    -------
    SoftAssignment
    """
    cfg = cfg or DykstraConfig()
    X = np.asarray(X, dtype=float)
    r, c = X.shape
    if not validate_kmax(r, c, k_max):
        resolve_kmax(k_max, r, c)  # raises with the bounds in the message
    P, _ = dykstra_forward(X, k_max, cfg)
    return SoftAssignment(P, k_max)


def sinkhorn_project(X, cfg=None):
    """Doubly-stochastic scaling of ``exp(X / tau)``.

    Every iteration applies ``P <- diag(P 1)^-1 P`` followed by column
    normalisation, for at most ``max_iter`` sweeps.
    """
    cfg = cfg or DykstraConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValidationError(f"Sinkhorn needs a square matrix, got shape {X.shape}")
    P, _ = _kernel(X, cfg.tau)
    for _ in range(int(cfg.max_iter)):
        rows = P.sum(axis=1)
        if np.any(rows < cfg.underflow_floor):
            raise ZeroRow("a row sum underflowed; tau is too small for the input scale")
        LP = P / rows[:, None]
        cols = LP.sum(axis=0)
        if np.any(cols < cfg.underflow_floor):
            raise ZeroColumn("a column sum underflowed; tau is too small for the input scale")
        P_new = LP / cols[None, :]
        # both half steps must be stationary; a sweep can return to its start
        done = max(np.max(np.abs(LP - P)), np.max(np.abs(P_new - LP))) < cfg.convergence_tol
        P = P_new
        if done:
            break
    return SoftAssignment(P, 1)


def round_to_hard(P):
    """Greedy rounding of a soft assignment to a binary one.

    Columns are visited in decreasing order of their largest entry and given
    to the best row that still has capacity (``k_max``). Rows left empty then
    take over, among the columns owned by the busiest rows, the one they
    value most. The result satisfies the hard constraints exactly whenever
    ``k_max >= ceil(c / r)``; below that, columns that find no free row go
    to their best row and the row capacity is exceeded.
    """
    M = P.matrix
    r, c = M.shape
    k = P.k_max
    if not validate_kmax(r, c, k):
        resolve_kmax(k, r, c)
    owner = np.full(c, -1, dtype=int)
    count = np.zeros(r, dtype=int)
    col_order = np.argsort(-M.max(axis=0), kind="stable")
    for j in col_order:
        row_order = np.argsort(-M[:, j], kind="stable")
        for i in row_order:
            if count[i] < k:
                owner[j] = i
                count[i] += 1
                break
        else:
            owner[j] = row_order[0]
            count[row_order[0]] += 1
    for i in range(r):
        if count[i] > 0:
            continue
        busiest = count.max()
        candidates = np.flatnonzero(count[owner] == busiest)
        j = candidates[np.argmax(M[i, candidates])]
        count[owner[j]] -= 1
        owner[j] = i
        count[i] = 1
    H = np.zeros((r, c))
    H[owner, np.arange(c)] = 1.0
    return SoftAssignment(H, k)
