"""Change-point detection wrapped around the moving-window tracker.

The driver monitors the support size of each sparse estimate. A tracked
segment goes through three phases:

  CP_BURNIN    let the freshly initialized subspace settle; nothing recorded.
  TEST_FILL    record support sizes into the normal-period histogram.
  MONITORING   per step, compute the empirical tail p-value of the current
               support size against the histogram, flag it if p <= alpha,
               and keep the last n_check (size, flag) pairs in FIFO buffers.
               A pair aging out of the FIFO is absorbed into the histogram,
               so no observation ever contributes to its own test.

When at least alpha_prop * n_check of the buffered flags are abnormal, the
buffer is scanned oldest-to-newest for the first run of n_positive
consecutive flags; the run's first time index t0 is declared a change
point. The pipeline then rewinds the stream to t0 and restarts end to end:
fresh batch burn-in starting at t0 (whose decomposition overwrites the
estimates for the burn-in span), fresh histogram, fresh buffers. Change
points closer together than n_burnin + n_cp_burnin + n_test samples are
structurally undetectable because detection is off during those phases.

All reported time indices are 1-based positions in the tracked stream
(the sample right after the initial burn-in block is t = 1) and are
absolute: they are not re-based after restarts.

The pipeline is a single-owner sequential state machine. Its stream must
support replay from a retained horizon of at least n_burnin + n_check
samples, since a restart rewinds to the detected change point.
"""

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolation
from .pcp import PcpConfig, burnin_initialize
from .projection import ProjectionConfig
from .trackers import DecompositionResult, omw_init, omw_step


class CpPhase(enum.Enum):
    CP_BURNIN = "cp-burnin"
    TEST_FILL = "test-fill"
    MONITORING = "monitoring"


@dataclass
class CpConfig:
    """Tuning parameters of the detector plus the underlying tracker.

    lambda1/lambda2 default to 1/sqrt(max(m, n_win)) and
    100/sqrt(max(m, n_win)). n_check should stay below n_win/2 to avoid
    missing change points (tuning guidance, not enforced).
    """

    n_burnin: int
    n_win: int
    n_cp_burnin: int
    n_test: int
    n_check: int
    alpha: float = 0.01
    alpha_prop: float = 0.5
    n_positive: int = 3
    n_tol: int = 0
    lambda1: float | None = None
    lambda2: float | None = None
    pcp: PcpConfig = field(default_factory=PcpConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    rank_rel_tol: float = 1e-6

    def __post_init__(self):
        if min(self.n_burnin, self.n_win, self.n_cp_burnin, self.n_test,
               self.n_check, self.n_positive) < 1:
            raise ContractViolation("CpConfig: counts must be >= 1")
        if self.n_win > self.n_burnin:
            raise ContractViolation("CpConfig: n_win must be <= n_burnin")
        if not (0 < self.alpha < 1):
            raise ContractViolation("CpConfig: alpha must be in (0, 1)")
        if not (0 < self.alpha_prop <= 1):
            raise ContractViolation("CpConfig: alpha_prop must be in (0, 1]")
        if self.n_positive > self.n_check:
            raise ContractViolation("CpConfig: n_positive must be <= n_check")
        if self.n_tol < 0:
            raise ContractViolation("CpConfig: n_tol must be >= 0")

    def resolved_lambdas(self, m):
        scale = 1.0 / np.sqrt(max(m, self.n_win))
        lambda1 = self.lambda1 if self.lambda1 is not None else scale
        lambda2 = self.lambda2 if self.lambda2 is not None else 100.0 * scale
        return lambda1, lambda2


class SupportHistogram:
    """Counts of past normal-period support sizes, indexed 0..m."""

    def __init__(self, m, counts=None):
        self.m = m
        if counts is None:
            self.counts = np.zeros(m + 1, dtype=np.int64)
        else:
            self.counts = np.asarray(counts, dtype=np.int64).copy()
            if self.counts.shape != (m + 1,):
                raise ContractViolation("SupportHistogram: bad counts shape")

    @property
    def total(self):
        return int(self.counts.sum())

    def record(self, c):
        if not 0 <= c <= self.m:
            raise ContractViolation(
                f"SupportHistogram: support size {c} outside [0, {self.m}]")
        self.counts[c] += 1

    def count_at_least(self, c_min):
        c_min = max(int(c_min), 0)
        if c_min > self.m:
            return 0
        return int(self.counts[c_min:].sum())


class FlagBuffers:
    """Paired FIFOs of recent support sizes and abnormality flags."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ContractViolation("FlagBuffers: capacity must be >= 1")
        self.capacity = capacity
        self.sizes = deque()
        self.flags = deque()

    def __len__(self):
        return len(self.flags)

    def clear(self):
        self.sizes.clear()
        self.flags.clear()


@dataclass
class CpDiagnostic:
    """Per-step monitoring record; p and flag are None outside MONITORING."""

    t: int
    support_size: int
    p: float | None
    flag: int | None
    phase: str


@dataclass
class ChangePointReport:
    change_points: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    status: str = "ok"
    warnings: list = field(default_factory=list)


def support_size(s, zero_eps=0.0):
    """Number of entries with magnitude above zero_eps.

    The projection solver produces exact zeros through shrinkage, so
    zero_eps = 0 is exact on solver output.
    """
    return int(np.count_nonzero(np.abs(np.asarray(s)) > zero_eps))


def p_value(hist, c_t, n_tol=0):
    """Fraction of recorded support sizes >= c_t - n_tol (clamped at 0)."""
    total = hist.total
    if total == 0:
        raise ContractViolation("p_value: empty histogram")
    return hist.count_at_least(c_t - n_tol) / total


def flag_observation(p, alpha):
    """1 iff p <= alpha (boundary inclusive)."""
    return 1 if p <= alpha else 0


def buffer_advance(buffers, hist, c_t, f_t):
    """Append (c_t, f_t); once the FIFOs exceed capacity, age out the oldest
    pair and absorb its support size into the histogram."""
    buffers.sizes.append(c_t)
    buffers.flags.append(f_t)
    if len(buffers.flags) == buffers.capacity + 1:
        c_old = buffers.sizes.popleft()
        buffers.flags.popleft()
        hist.record(c_old)


def scan_for_changepoint(flags, alpha_prop, n_check, n_positive, current_t):
    """Locate a change point in a full flag buffer.

    flags[k] corresponds to time current_t - n_check + 1 + k. If the number
    of abnormal flags reaches alpha_prop * n_check, the first run of
    n_positive consecutive flags is located and the time of its first
    element returned; otherwise (including threshold met but no such run)
    returns None.
    """
    flags = list(flags)
    if len(flags) != n_check:
        raise ContractViolation(
            f"scan_for_changepoint: buffer holds {len(flags)} flags, "
            f"expected {n_check}")
    if sum(flags) < alpha_prop * n_check:
        return None
    run = 0
    for k, f in enumerate(flags):
        run = run + 1 if f else 0
        if run == n_positive:
            return current_t - n_check + 1 + (k - n_positive + 1)
    return None


class OmwCpPipeline:
    """Resumable driver for the tracking + detection loop.

    The pipeline owns the tracked estimates because a restart rewrites
    recent columns with the fresh burn-in decomposition; snapshots therefore
    carry the accumulated columns along with the tracker and detector state.
    """

    STATUS_OK = "ok"
    STATUS_INSUFFICIENT = "insufficient-stream"

    def __init__(self, config, pcp_config=None):
        self.config = config
        self.pcp_config = pcp_config if pcp_config is not None else config.pcp
        self.initialized = False
        self.model = None
        self.buffer = None
        self.hist = None
        self.flag_buffers = None
        self.t_start = 1       # first tracked time of the current segment
        self.t = 1             # next tracked time to process
        self.cols_l = {}       # tracked time -> low-rank column
        self.cols_s = {}
        self.change_points = []
        self.detection_enabled = True
        self.status = self.STATUS_OK
        self.warnings = []

    # -- phase bookkeeping -------------------------------------------------

    def phase_of(self, t):
        offset = t - self.t_start
        if offset < self.config.n_cp_burnin:
            return CpPhase.CP_BURNIN
        if offset < self.config.n_cp_burnin + self.config.n_test:
            return CpPhase.TEST_FILL
        return CpPhase.MONITORING

    # -- stream geometry: tracked time t lives at stream index n_burnin+t-1

    def _stream_index(self, t):
        return self.config.n_burnin + t - 1

    def _read_block(self, stream, first_t, count):
        """Tracked samples [first_t, first_t+count), or None if the stream
        ends first."""
        cols = []
        for t in range(first_t, first_t + count):
            x = stream.get(self._stream_index(t))
            if x is None:
                return None
            cols.append(x)
        return np.column_stack(cols)

    def _start_segment(self, stream, first_t, record_outputs):
        """Run batch burn-in on tracked samples [first_t, first_t+n_burnin)
        and reinitialize tracker and detector state. Returns False if the
        stream is too short. The initial segment passes first_t = 1-n_burnin,
        which maps onto the leading burn-in block of the stream."""
        cfg = self.config
        M_b = self._read_block(stream, first_t, cfg.n_burnin)
        if M_b is None:
            return False
        m = M_b.shape[0]
        lambda1, lambda2 = cfg.resolved_lambdas(m)
        init = burnin_initialize(M_b, lambda1, lambda2, cfg.n_win,
                                 pcp_config=self.pcp_config,
                                 rank_rel_tol=cfg.rank_rel_tol)
        self.model, self.buffer = omw_init(init, lambda1, lambda2, cfg.n_win)
        if record_outputs:
            for k in range(cfg.n_burnin):
                self.cols_l[first_t + k] = init.L_b[:, k].copy()
                self.cols_s[first_t + k] = init.S_b[:, k].copy()
        self.hist = SupportHistogram(m)
        self.flag_buffers = FlagBuffers(cfg.n_check)
        self.t_start = first_t + cfg.n_burnin
        self.t = self.t_start
        return True

    # -- main loop ----------------------------------------------------------

    def run(self, stream):
        """Consume the stream to exhaustion; resumable across calls."""
        cfg = self.config
        diagnostics = []

        if not self.initialized:
            ok = self._start_segment(stream, 1 - cfg.n_burnin,
                                     record_outputs=False)
            if not ok:
                self.status = self.STATUS_INSUFFICIENT
                self.warnings.append(
                    f"stream shorter than n_burnin={cfg.n_burnin}; "
                    "nothing tracked")
                return self._result(diagnostics)
            self.initialized = True

        while True:
            x = stream.get(self._stream_index(self.t))
            if x is None:
                break
            out = omw_step(self.model, self.buffer, x, cfg.projection)
            t = self.t
            self.cols_l[t] = out.l
            self.cols_s[t] = out.s
            c_t = support_size(out.s)
            phase = self.phase_of(t)
            p = f = None
            t0 = None
            if phase is CpPhase.TEST_FILL and self.detection_enabled:
                self.hist.record(c_t)
            elif phase is CpPhase.MONITORING and self.detection_enabled:
                p = p_value(self.hist, c_t, cfg.n_tol)
                f = flag_observation(p, cfg.alpha)
                buffer_advance(self.flag_buffers, self.hist, c_t, f)
                if len(self.flag_buffers) == cfg.n_check:
                    t0 = scan_for_changepoint(
                        self.flag_buffers.flags, cfg.alpha_prop, cfg.n_check,
                        cfg.n_positive, current_t=t)
            diagnostics.append(CpDiagnostic(
                t=t, support_size=c_t, p=p, flag=f, phase=phase.value))
            if t0 is not None:
                self.change_points.append(t0)
                if self._start_segment(stream, t0, record_outputs=True):
                    continue
                # Too close to the stream end for a fresh burn-in: finish
                # the tail with the current tracker, detection off.
                self.warnings.append(
                    f"change point at t={t0} leaves fewer than "
                    f"n_burnin={cfg.n_burnin} samples; tail processed in "
                    "tracking-only mode")
                self.detection_enabled = False
            self.t = t + 1
        return self._result(diagnostics)

    def _result(self, diagnostics):
        if self.cols_l:
            t_max = max(self.cols_l)
            L = np.column_stack([self.cols_l[t] for t in range(1, t_max + 1)])
            S = np.column_stack([self.cols_s[t] for t in range(1, t_max + 1)])
        else:
            m = self.model.m if self.model is not None else 0
            L = np.zeros((m, 0))
            S = np.zeros((m, 0))
        result = DecompositionResult(L=L, S=S,
                                     change_points=list(self.change_points))
        report = ChangePointReport(change_points=list(self.change_points),
                                   diagnostics=diagnostics,
                                   status=self.status,
                                   warnings=list(self.warnings))
        return result, report


def run_omw_cp(stream, config, pcp_config=None):
    """Run the moving-window tracker with change-point detection.

    Returns (DecompositionResult, ChangePointReport). The stream must hold
    the burn-in block in its first n_burnin samples; tracked estimates cover
    everything after it.
    """
    return OmwCpPipeline(config, pcp_config).run(stream)
