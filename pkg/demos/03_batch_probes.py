"""Lifecycle probes against the simulated backend.

measure_pod_batch deploys a pod batch, waits for readiness, deletes
it, and reduces the event stream to per-pod latencies. On a
jitter-free cluster those latencies follow the placement arithmetic
exactly, which this script recomputes by hand. It also shows the
capacity failure mode: an oversize batch comes back incomplete rather
than raising away the partial measurement.

    python demos/03_batch_probes.py
"""

from edgebench.model import ClusterSpec, NodeProfile
from edgebench.probes import measure_pod_batch
from edgebench.sim import open_session

CLUSTER = ClusterSpec(name="probe-demo", nodes=(
    NodeProfile("control", "control-plane", cpu_cores=4, mem_gb=8.0),
    NodeProfile("w1", "worker", cpu_cores=2, mem_gb=4.0,
                readiness_base_s=2.0, readiness_slope_s=0.1,
                deletion_base_s=1.0),
    NodeProfile("w2", "worker", cpu_cores=2, mem_gb=4.0,
                readiness_base_s=2.0, readiness_slope_s=0.1,
                deletion_base_s=1.0),
))


def closed_form(n, workers=2, base=2.0, slope=0.1):
    # Round-robin placement: pod i lands on worker i % workers and is
    # that worker's (i // workers + 1)-th admission.
    return [base + slope * (i // workers + 1) for i in range(n)]


if __name__ == "__main__":
    batch = measure_pod_batch(open_session(CLUSTER, seed=7), 6)
    expected = closed_form(6)
    print("per-pod readiness (measured vs closed form):")
    for got, want in zip(batch.per_pod_readiness_s, expected):
        print(f"  {got:.3f} s   {want:.3f} s")
    assert list(batch.per_pod_readiness_s) == expected
    print(f"makespan: {batch.readiness_makespan_s:.3f} s "
          f"(max of the per-pod values)")
    print(f"deletion makespan: {batch.deletion_makespan_s:.3f} s")

    # 2 workers x 2 cores x 10 pods per core = 40 pods of room.
    overflow = measure_pod_batch(open_session(CLUSTER, seed=7), 60)
    print(f"\nrequesting 60 pods against capacity 40:")
    print(f"  complete: {overflow.complete}")
    print(f"  placed:   {len(overflow.per_pod_readiness_s)} pods")
    print(f"  reason:   {overflow.failure}")
