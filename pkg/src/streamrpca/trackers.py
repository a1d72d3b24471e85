"""Online trackers: cumulative ("stoc") and moving-window ("omw").

Both trackers consume one sample per step: project it onto the current
basis, fold the coefficient/sparse pair into the accumulators A and B, and
run one block-coordinate sweep of the basis update. The cumulative tracker
keeps growing sums; the moving-window tracker additionally subtracts the
contribution of the sample falling out of a ring buffer of the most recent
n_win samples, so its state size is independent of how long it has run.

A tracker is single-owner mutable state: one step at a time, no concurrent
steps. Independent instances can run on different threads, and state can be
handed between threads between steps.
"""

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .basis import update_basis
from .exceptions import ContractViolation, TrackerStepError
from .pcp import PcpConfig, burnin_initialize
from .projection import ProjectionConfig, project_sample

# Recompute A/B from the ring buffer every DRIFT_CORRECTION_FACTOR * n_win
# steps to cancel float accumulation drift from the add/subtract updates.
DRIFT_CORRECTION_FACTOR = 10


@dataclass
class SubspaceModel:
    """Mutable tracker state: basis, accumulators, penalties, step count."""

    U: np.ndarray
    A: np.ndarray
    B: np.ndarray
    lambda1: float
    lambda2: float
    t: int = 0

    def __post_init__(self):
        m, r = self.U.shape
        if self.A.shape != (r, r) or self.B.shape != (m, r):
            raise ContractViolation(
                f"SubspaceModel: inconsistent shapes U{self.U.shape} "
                f"A{self.A.shape} B{self.B.shape}"
            )
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ContractViolation("SubspaceModel: lambdas must be > 0")

    @property
    def m(self):
        return self.U.shape[0]

    @property
    def r(self):
        return self.U.shape[1]


class WindowBuffer:
    """Ring buffer of the last n_win (m_i, v_i, s_i) tuples, FIFO order."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ContractViolation("WindowBuffer: capacity must be >= 1")
        self.capacity = capacity
        self._entries = deque()

    @classmethod
    def from_seed(cls, seed, capacity):
        if len(seed) != capacity:
            raise ContractViolation(
                f"WindowBuffer seed length {len(seed)} != capacity {capacity}"
            )
        buf = cls(capacity)
        for m_i, v_i, s_i in seed:
            buf.push(m_i, v_i, s_i)
        return buf

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def is_full(self):
        return len(self._entries) == self.capacity

    def push(self, m_i, v_i, s_i):
        # copies: entries outlive the step and must not alias caller arrays
        if len(self._entries) >= self.capacity:
            raise ContractViolation("WindowBuffer: push on a full buffer")
        self._entries.append((np.array(m_i, dtype=float),
                              np.array(v_i, dtype=float),
                              np.array(s_i, dtype=float)))

    def pop_oldest(self):
        if not self._entries:
            raise ContractViolation("WindowBuffer: pop on an empty buffer")
        return self._entries.popleft()

    def recompute_accumulators(self):
        """Rebuild A = sum v v' and B = sum (m - s) v' from the entries."""
        m_dim = self._entries[0][0].shape[0]
        r = self._entries[0][1].shape[0]
        A = np.zeros((r, r))
        B = np.zeros((m_dim, r))
        for m_i, v_i, s_i in self._entries:
            A += np.outer(v_i, v_i)
            B += np.outer(m_i - s_i, v_i)
        return A, B


@dataclass
class StepOutput:
    v: np.ndarray
    s: np.ndarray
    l: np.ndarray  # U_t @ v_t, computed with the post-update basis


@dataclass
class DecompositionResult:
    """Per-time low-rank and sparse estimates plus detected change points."""

    L: np.ndarray
    S: np.ndarray
    change_points: list = field(default_factory=list)


@dataclass
class TrackerConfig:
    """Configuration for run_tracker.

    lambda1/lambda2 default to the rule-of-thumb 1/sqrt(max(m, n_win)) and
    100/sqrt(max(m, n_win)) once the sample dimension is known.
    """

    n_burnin: int
    n_win: int
    lambda1: float | None = None
    lambda2: float | None = None
    pcp: PcpConfig = field(default_factory=PcpConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    rank_rel_tol: float = 1e-6
    stoc_zero_init: bool = False
    stoc_zero_init_rank: int | None = None

    def __post_init__(self):
        if self.n_burnin < 1 or self.n_win < 1:
            raise ContractViolation("TrackerConfig: n_burnin, n_win must be >= 1")
        if self.n_win > self.n_burnin:
            raise ContractViolation("TrackerConfig: n_win must be <= n_burnin")

    def resolved_lambdas(self, m):
        scale = 1.0 / np.sqrt(max(m, self.n_win))
        lambda1 = self.lambda1 if self.lambda1 is not None else scale
        lambda2 = self.lambda2 if self.lambda2 is not None else 100.0 * scale
        return lambda1, lambda2


def stoc_init(m, r, lambda1, lambda2):
    """Literal zero initialization (degenerate: the basis never leaves zero
    without an external seed; kept for completeness and bookkeeping tests)."""
    if m < 1 or r < 1:
        raise ContractViolation("stoc_init: m, r must be >= 1")
    return SubspaceModel(U=np.zeros((m, r)), A=np.zeros((r, r)),
                         B=np.zeros((m, r)), lambda1=lambda1, lambda2=lambda2)


def stoc_init_from_burnin(init, lambda1, lambda2):
    """Seed the cumulative tracker from a burn-in decomposition."""
    return SubspaceModel(U=init.U0.copy(), A=init.A0.copy(), B=init.B0.copy(),
                         lambda1=lambda1, lambda2=lambda2)


def stoc_step(model, m_t, projection_config=None):
    """One cumulative step: project, grow A and B, update the basis."""
    m_t = np.asarray(m_t, dtype=float)
    if m_t.shape != (model.m,):
        raise ContractViolation(
            f"stoc_step: sample dimension {m_t.shape} != ({model.m},)"
        )
    v, s = project_sample(model.U, m_t, model.lambda1, model.lambda2,
                          projection_config)
    model.A += np.outer(v, v)
    model.B += np.outer(m_t - s, v)
    update_basis(model.U, model.A, model.B, model.lambda1)
    model.t += 1
    return StepOutput(v=v, s=s, l=model.U @ v)


def omw_init(init, lambda1, lambda2, n_win):
    """Seed the moving-window tracker: model plus preloaded ring buffer."""
    if len(init.window_seed) != n_win:
        raise ContractViolation(
            f"omw_init: window seed length {len(init.window_seed)} != "
            f"n_win {n_win}"
        )
    model = SubspaceModel(U=init.U0.copy(), A=init.A0.copy(),
                          B=init.B0.copy(), lambda1=lambda1, lambda2=lambda2)
    buffer = WindowBuffer.from_seed(init.window_seed, n_win)
    return model, buffer


def omw_step(model, buffer, m_t, projection_config=None):
    """One moving-window step.

    Projects the sample, swaps its contribution for the evicted ring entry
    in A and B, updates the basis, and pushes the new tuple. Periodically
    recomputes A and B from the buffer to cancel float drift.
    """
    if not buffer.is_full:
        raise ContractViolation("omw_step: window buffer is not full")
    m_t = np.asarray(m_t, dtype=float)
    if m_t.shape != (model.m,):
        raise ContractViolation(
            f"omw_step: sample dimension {m_t.shape} != ({model.m},)"
        )
    v, s = project_sample(model.U, m_t, model.lambda1, model.lambda2,
                          projection_config)
    m_old, v_old, s_old = buffer.pop_oldest()
    model.A += np.outer(v, v) - np.outer(v_old, v_old)
    model.B += np.outer(m_t - s, v) - np.outer(m_old - s_old, v_old)
    update_basis(model.U, model.A, model.B, model.lambda1)
    buffer.push(m_t, v, s)
    model.t += 1
    if model.t % (DRIFT_CORRECTION_FACTOR * buffer.capacity) == 0:
        model.A, model.B = buffer.recompute_accumulators()
    return StepOutput(v=v, s=s, l=model.U @ v)


def state_element_count(model, buffer=None):
    """Structural size of tracker state in stored float elements."""
    count = model.U.size + model.A.size + model.B.size
    if buffer is not None:
        count += sum(m_i.size + v_i.size + s_i.size
                     for m_i, v_i, s_i in buffer)
    return count


def init_tracker(stream, mode, config):
    """Consume the leading n_burnin samples and build the tracker state.

    Returns (model, buffer, next_index); buffer is None for "stoc".
    """
    if mode not in ("stoc", "omw"):
        raise ContractViolation(f"init_tracker: unknown mode {mode!r}")
    burn = []
    for i in range(config.n_burnin):
        x = stream.get(i)
        if x is None:
            raise ContractViolation(
                f"init_tracker: stream ended inside burn-in "
                f"({i} of {config.n_burnin} samples)"
            )
        burn.append(x)
    M_b = np.column_stack(burn)
    m = M_b.shape[0]
    lambda1, lambda2 = config.resolved_lambdas(m)

    buffer = None
    if mode == "stoc" and config.stoc_zero_init:
        if config.stoc_zero_init_rank is None:
            raise ContractViolation(
                "init_tracker: stoc_zero_init requires stoc_zero_init_rank")
        model = stoc_init(m, config.stoc_zero_init_rank, lambda1, lambda2)
    else:
        init = burnin_initialize(M_b, lambda1, lambda2, config.n_win,
                                 pcp_config=config.pcp,
                                 rank_rel_tol=config.rank_rel_tol)
        if mode == "stoc":
            model = stoc_init_from_burnin(init, lambda1, lambda2)
        else:
            model, buffer = omw_init(init, lambda1, lambda2, config.n_win)
    return model, buffer, config.n_burnin


def continue_tracker(stream, mode, model, buffer, start_index,
                     projection_config=None):
    """Step from stream index start_index to exhaustion.

    Mutates model (and buffer); returns (DecompositionResult, next_index).
    Step failures carry the 1-based offset from start_index.
    """
    L_cols, S_cols = [], []
    i = start_index
    while True:
        x = stream.get(i)
        if x is None:
            break
        try:
            if mode == "stoc":
                out = stoc_step(model, x, projection_config)
            else:
                out = omw_step(model, buffer, x, projection_config)
        except Exception as exc:
            raise TrackerStepError(i - start_index + 1, str(exc)) from exc
        L_cols.append(out.l)
        S_cols.append(out.s)
        i += 1
    if L_cols:
        L = np.column_stack(L_cols)
        S = np.column_stack(S_cols)
    else:
        L = np.zeros((model.m, 0))
        S = np.zeros((model.m, 0))
    return DecompositionResult(L=L, S=S, change_points=[]), i


def run_tracker(stream, mode, config):
    """Drive a tracker over a stream whose first n_burnin samples are burn-in.

    mode is "stoc" or "omw". Returns the estimates for every post-burn-in
    sample; the burn-in block itself is consumed for initialization only.
    """
    model, buffer, start = init_tracker(stream, mode, config)
    result, _ = continue_tracker(stream, mode, model, buffer, start,
                                 config.projection)
    return result


def time_steps(model, buffer, samples, projection_config=None):
    """Run omw steps over `samples`, returning per-step wall times (seconds)."""
    times = []
    for x in samples:
        t0 = time.perf_counter()
        omw_step(model, buffer, x, projection_config)
        times.append(time.perf_counter() - t0)
    return times
