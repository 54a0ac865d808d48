"""Idle power and energy accounting.

The node power model is linear: P = P_idle + (P_max - P_idle) * U_cpu
plus 0.2 W per resident GB. Feeding it the published mean CPU and
memory footprints reproduces the published watt tables; daily energy
is P * 24 h. Arm-vs-arm cost lands as a signed percentage overhead.

    python demos/04_power_tables.py
"""

from edgebench import fixtures, metrics

# Reference per-node watt cells for the three-node cluster comparison,
# in the resource-profile order of the fixture (master, worker-1,
# worker-2). The cluster row of that table is the sum of these cells,
# so the overhead below is computed from them as well.
PUBLISHED_NODE_W = {
    "k8s": (36.3, 35.8, 35.5),
    "codeco": (38.3, 37.8, 36.6),
}


def cluster_table():
    config = fixtures.campaign_table4()
    params = metrics.PowerModelParams(p_idle_w=35.0, p_max_w=95.0)
    sums = {}
    for arm in (config.baseline, config.treatment):
        print(f"arm '{arm.label}':")
        total = 0.0
        for profile, cell in zip(arm.resources, PUBLISHED_NODE_W[arm.label]):
            watts = metrics.estimate_power(profile.cpu_baseline,
                                           profile.mem_baseline_gb, params)
            assert abs(watts - cell) <= 0.15, (profile.node, watts, cell)
            total += cell
            print(f"  {profile.node:10} cpu {profile.cpu_baseline:>6.4f}  "
                  f"mem {profile.mem_baseline_gb:>5.2f} GB  "
                  f"model {watts:6.2f} W  reference {cell:5.1f} W")
        energy = metrics.daily_energy(total)
        print(f"  cluster: {total:.1f} W, {energy:.2f} kWh/day")
        sums[arm.label] = total
    extra = metrics.compute_overhead(sums["codeco"], sums["k8s"])
    print(f"power overhead of the treatment stack: +{extra}%")


def host_table():
    params = metrics.PowerModelParams(p_idle_w=fixtures.TABLE5_P_IDLE_W,
                                      p_max_w=fixtures.TABLE5_P_MAX_W)
    print("\nsingle host carrying a growing virtual cluster:")
    print("  nodes  arm          model W   published W")
    for nodes, arm, cpu, mem, published in fixtures.TABLE5_POINTS:
        watts = metrics.estimate_power(cpu, mem, params)
        print(f"  {nodes:>5}  {arm:11}  {watts:7.2f}   {published:6.1f}")
    top = {arm: metrics.round_half_away(
               metrics.estimate_power(cpu, mem, params), 1)
           for nodes, arm, cpu, mem, _ in fixtures.TABLE5_POINTS
           if nodes == 20}
    extra = metrics.compute_overhead(top["codeco-kind"], top["kind"])
    print(f"  at 20 virtual nodes: +{extra}% "
          f"({top['codeco-kind']} W vs {top['kind']} W)")


if __name__ == "__main__":
    cluster_table()
    host_table()
