"""Sweep orchestration: one simulation per load point, CSV output.

Every load point gets its own engine and its own seed derived from the run
seed and the point's index, so points are independent and a sweep can run
them in any order or in parallel without changing a single byte of output.
Worker count comes from the explicit argument, else the FABRICSIM_WORKERS
environment variable, else 1.
"""

from __future__ import annotations

import multiprocessing
import os

from .engine import derive_seed
from .metrics import SweepResult
from .simulation import FabricSimulation

#: Stream offset separating per-point seeds from per-accelerator streams.
_POINT_STREAM_BASE = 0x5EED_0000

CSV_HEADER = ("load_pct,intra_gbps,inter_gbps,total_gbps,"
              "lat_src_acc_ns,lat_src_intra_ns,lat_src_nic_ns,lat_inter_ns,"
              "lat_dst_nic_ns,lat_dst_intra_ns,lat_dst_acc_ns,delivered_msgs")


class SweepError(RuntimeError):
    """A load point failed; the message names it."""


def point_seed(run_seed: int, index: int) -> int:
    return derive_seed(run_seed, _POINT_STREAM_BASE + index)


def run_point(cfg, index: int) -> SweepResult:
    """Simulate the index-th load point of the config's sweep."""
    lp = cfg.load_points[index]
    sim = FabricSimulation(cfg, lp, point_seed(cfg.seed, index))
    return sim.run()


def _worker(args):
    cfg, index = args
    return index, run_point(cfg, index)


def resolve_workers(workers=None) -> int:
    if workers is None:
        raw = os.environ.get("FABRICSIM_WORKERS", "")
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise SweepError(
                    f"FABRICSIM_WORKERS must be an integer, got {raw!r}") from None
        else:
            workers = 1
    if workers < 1:
        raise SweepError(f"worker count must be >= 1, got {workers}")
    return workers


def run_sweep(cfg, workers=None, on_point=None) -> list:
    """Run all load points; results ordered as in the config.

    on_point, if given, is called with each finished SweepResult (in
    completion order under parallel execution).
    """
    count = len(cfg.load_points)
    workers = min(resolve_workers(workers), count)
    results = [None] * count
    if workers == 1:
        for i in range(count):
            try:
                results[i] = run_point(cfg, i)
            except Exception as exc:
                raise SweepError(
                    f"load point {cfg.loads[i]:g} failed: {exc}") from exc
            if on_point is not None:
                on_point(results[i])
        return results

    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        jobs = {
            i: pool.apply_async(_worker, ((cfg, i),))
            for i in range(count)
        }
        pool.close()
        for i, job in jobs.items():
            try:
                _, results[i] = job.get()
            except Exception as exc:
                pool.terminate()
                raise SweepError(
                    f"load point {cfg.loads[i]:g} failed: {exc}") from exc
            if on_point is not None:
                on_point(results[i])
    return results


def _mean_row(r: SweepResult) -> str:
    lats = ",".join(f"{v:.3f}" for v in r.mean_ns)
    return (f"{r.load * 100:g},{r.intra_gbps:.6f},{r.inter_gbps:.6f},"
            f"{r.total_gbps:.6f},{lats},{r.delivered_messages}")


def _p99_row(r: SweepResult) -> str:
    lats = ",".join(f"{v:.3f}" for v in r.p99_ns)
    return (f"{r.load * 100:g},{r.intra_gbps:.6f},{r.inter_gbps:.6f},"
            f"{r.total_gbps:.6f},{lats},{r.delivered_messages}")


def render_csv(results, percentile: bool = False) -> str:
    row = _p99_row if percentile else _mean_row
    lines = [CSV_HEADER]
    lines.extend(row(r) for r in results)
    return "\n".join(lines) + "\n"


def p99_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_p99{ext or '.csv'}"


def write_csv(results, path: str) -> str:
    """Write the mean CSV and its _p99 sibling; returns the sibling path."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(results))
    sibling = p99_path(path)
    with open(sibling, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(results, percentile=True))
    return sibling
