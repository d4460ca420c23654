"""
How many packets does a flood cost?
===================================

135 nodes are scattered over a square with the sink in the middle.  Links are
profiled, a min-hop tree is built from the reliable ones, and each source's
flood is restricted to its path to the sink plus ``width - 1`` helpers per hop.
Glossy-style flooding, where every node relays every packet, is the
reference.
"""

import numpy as np

from stair import (
    FloodConfig,
    build_active_sets,
    build_connectivity_edges,
    build_min_hop_tree,
    generate_topology,
    glossy_mode,
    profile_links,
    round_robin_schedule,
    run_campaign,
)

graph = generate_topology(seed=0, n=135, side=140.0)
profiled = profile_links(graph, rounds=100, seed=1)
tree = build_min_hop_tree(build_connectivity_edges(profiled, theta=0.7), profiled.sink, profiled.q)
print(f"mean hop depth {tree.mean_depth:.2f}, deepest node {int(np.nanmax(tree.depth[tree.connected]))} hops")

# One flood per node, in turn; every 8th slot is a sink reference flood.
schedule = round_robin_schedule(range(graph.n), graph.n)
glossy = run_campaign(graph, glossy_mode(graph.n), schedule, FloodConfig(), 4000, seed=0)

print(f"\n{'mode':>7} {'set size':>9} {'packets':>9} {'vs Glossy':>10} {'delivered':>10}")
for w in (1, 2, 4, 5, 10):
    sets = build_active_sets(profiled, tree, w)
    rep = run_campaign(graph, sets, schedule, FloodConfig(width=w), 4000, seed=0)
    print(
        f"{'S' + str(w):>7} {sets.set_sizes().mean():9.1f} {rep.total_tx:9d} "
        f"{rep.total_tx / glossy.total_tx:10.3f} {rep.delivered_fraction:10.1%}"
    )
print(f"{'Glossy':>7} {graph.n:9.1f} {glossy.total_tx:9d} {1.0:10.3f} {glossy.delivered_fraction:10.1%}")
