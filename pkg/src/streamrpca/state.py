"""Tracker state snapshots.

A snapshot captures everything needed to resume a tracker mid-stream with
bit-identical behavior: the subspace model, the ring buffer, the detector
state for change-point runs, and the absolute index of the next unread
sample. Change-point snapshots also carry the estimates accumulated so far,
because a later restart may rewrite recently emitted columns.

Snapshots are stored as .npz containers; floats round-trip exactly.
"""

from dataclasses import dataclass

import numpy as np

from .changepoint import FlagBuffers, OmwCpPipeline, SupportHistogram
from .exceptions import SnapshotError
from .trackers import SubspaceModel, WindowBuffer

SNAPSHOT_VERSION = 1


@dataclass
class StateSnapshot:
    version: int
    kind: str                 # "stoc" | "omw" | "omw-cp"
    model: SubspaceModel
    buffer: WindowBuffer | None
    cursor: int               # absolute stream index of the next unread sample
    detector: dict | None = None


def snapshot_tracker(kind, model, buffer=None, cursor=0):
    return StateSnapshot(version=SNAPSHOT_VERSION, kind=kind, model=model,
                         buffer=buffer, cursor=cursor)


def snapshot_cp_pipeline(pipeline):
    """Capture an OmwCpPipeline between steps."""
    if not pipeline.initialized:
        raise SnapshotError("cannot snapshot an uninitialized pipeline")
    t_max = max(pipeline.cols_l) if pipeline.cols_l else 0
    m = pipeline.model.m
    L = np.column_stack([pipeline.cols_l[t] for t in range(1, t_max + 1)]) \
        if t_max else np.zeros((m, 0))
    S = np.column_stack([pipeline.cols_s[t] for t in range(1, t_max + 1)]) \
        if t_max else np.zeros((m, 0))
    detector = {
        "hist_counts": pipeline.hist.counts.copy(),
        "fb_sizes": np.array(list(pipeline.flag_buffers.sizes), dtype=np.int64),
        "fb_flags": np.array(list(pipeline.flag_buffers.flags), dtype=np.int64),
        "t_start": pipeline.t_start,
        "next_t": pipeline.t,
        "change_points": np.array(pipeline.change_points, dtype=np.int64),
        "detection_enabled": pipeline.detection_enabled,
        "status": pipeline.status,
        "warnings": list(pipeline.warnings),
        "L_partial": L,
        "S_partial": S,
    }
    cursor = pipeline.config.n_burnin + pipeline.t - 1
    return StateSnapshot(version=SNAPSHOT_VERSION, kind="omw-cp",
                         model=pipeline.model, buffer=pipeline.buffer,
                         cursor=cursor, detector=detector)


def restore_cp_pipeline(snapshot, config, pcp_config=None):
    """Rebuild an OmwCpPipeline from a snapshot taken with the same config."""
    if snapshot.kind != "omw-cp" or snapshot.detector is None:
        raise SnapshotError(f"snapshot kind {snapshot.kind!r} is not omw-cp")
    det = snapshot.detector
    pipeline = OmwCpPipeline(config, pcp_config)
    pipeline.initialized = True
    pipeline.model = snapshot.model
    pipeline.buffer = snapshot.buffer
    pipeline.hist = SupportHistogram(snapshot.model.m, det["hist_counts"])
    pipeline.flag_buffers = FlagBuffers(config.n_check)
    pipeline.flag_buffers.sizes.extend(int(c) for c in det["fb_sizes"])
    pipeline.flag_buffers.flags.extend(int(f) for f in det["fb_flags"])
    pipeline.t_start = int(det["t_start"])
    pipeline.t = int(det["next_t"])
    pipeline.change_points = [int(c) for c in det["change_points"]]
    pipeline.detection_enabled = bool(det["detection_enabled"])
    pipeline.status = str(det["status"])
    pipeline.warnings = list(det["warnings"])
    L, S = det["L_partial"], det["S_partial"]
    for k in range(L.shape[1]):
        pipeline.cols_l[k + 1] = L[:, k].copy()
        pipeline.cols_s[k + 1] = S[:, k].copy()
    return pipeline


def save_state(path, snapshot):
    """Write a snapshot to an .npz file."""
    arrays = {
        "version": np.int64(snapshot.version),
        "kind": np.str_(snapshot.kind),
        "cursor": np.int64(snapshot.cursor),
        "U": snapshot.model.U,
        "A": snapshot.model.A,
        "B": snapshot.model.B,
        "lambda1": np.float64(snapshot.model.lambda1),
        "lambda2": np.float64(snapshot.model.lambda2),
        "t": np.int64(snapshot.model.t),
        "has_buffer": np.bool_(snapshot.buffer is not None),
    }
    if snapshot.buffer is not None:
        arrays["buffer_capacity"] = np.int64(snapshot.buffer.capacity)
        arrays["buffer_m"] = np.stack([e[0] for e in snapshot.buffer])
        arrays["buffer_v"] = np.stack([e[1] for e in snapshot.buffer])
        arrays["buffer_s"] = np.stack([e[2] for e in snapshot.buffer])
    if snapshot.detector is not None:
        det = snapshot.detector
        arrays["det_hist_counts"] = det["hist_counts"]
        arrays["det_fb_sizes"] = det["fb_sizes"]
        arrays["det_fb_flags"] = det["fb_flags"]
        arrays["det_t_start"] = np.int64(det["t_start"])
        arrays["det_next_t"] = np.int64(det["next_t"])
        arrays["det_change_points"] = det["change_points"]
        arrays["det_detection_enabled"] = np.bool_(det["detection_enabled"])
        arrays["det_status"] = np.str_(det["status"])
        arrays["det_warnings"] = np.array(det["warnings"], dtype=str)
        arrays["det_L_partial"] = det["L_partial"]
        arrays["det_S_partial"] = det["S_partial"]
    np.savez(path, **arrays)


def load_state(path):
    """Read a snapshot; corrupt or version-mismatched files raise
    SnapshotError without returning partial state."""
    try:
        with np.load(path, allow_pickle=False) as data:
            if "version" not in data:
                raise SnapshotError(f"{path}: not a state snapshot")
            version = int(data["version"])
            if version != SNAPSHOT_VERSION:
                raise SnapshotError(
                    f"{path}: snapshot version {version} unsupported "
                    f"(expected {SNAPSHOT_VERSION})")
            kind = str(data["kind"])
            model = SubspaceModel(U=data["U"].copy(), A=data["A"].copy(),
                                  B=data["B"].copy(),
                                  lambda1=float(data["lambda1"]),
                                  lambda2=float(data["lambda2"]),
                                  t=int(data["t"]))
            buffer = None
            if bool(data["has_buffer"]):
                buffer = WindowBuffer(int(data["buffer_capacity"]))
                for m_i, v_i, s_i in zip(data["buffer_m"], data["buffer_v"],
                                         data["buffer_s"]):
                    buffer.push(m_i, v_i, s_i)
            detector = None
            if "det_hist_counts" in data:
                detector = {
                    "hist_counts": data["det_hist_counts"].copy(),
                    "fb_sizes": data["det_fb_sizes"].copy(),
                    "fb_flags": data["det_fb_flags"].copy(),
                    "t_start": int(data["det_t_start"]),
                    "next_t": int(data["det_next_t"]),
                    "change_points": data["det_change_points"].copy(),
                    "detection_enabled": bool(data["det_detection_enabled"]),
                    "status": str(data["det_status"]),
                    "warnings": [str(w) for w in data["det_warnings"]],
                    "L_partial": data["det_L_partial"].copy(),
                    "S_partial": data["det_S_partial"].copy(),
                }
            return StateSnapshot(version=version, kind=kind, model=model,
                                 buffer=buffer, cursor=int(data["cursor"]),
                                 detector=detector)
    except SnapshotError:
        raise
    except Exception as exc:
        raise SnapshotError(f"{path}: unreadable snapshot: {exc}") from exc
