"""
Topologies and request workloads
================================

Build the reference layered network, look at shortest-path costs to the
custodian, and draw Zipf requests.
"""
import numpy as np

from qcaching.topology import build_layered, build_tree, leaf_nodes
from qcaching.workload import RequestDistribution, zipf_weights

# 3 levels of 4 caches; every top node links to the custodian at cost 100
topo = build_layered(3, 4, custodian_cost=100.0)
print("caches:", topo.node_count, "custodian id:", topo.custodian)
print("distance to custodian:", topo.distances_to_custodian())
print("hop diameter:", topo.hop_diameter())

tree = build_tree(3)
print("binary tree of depth 3 has", tree.node_count, "nodes, leaves", sorted(leaf_nodes(tree)))

# each cache issues one request per step, content ranks follow Zipf(0.8)
p = zipf_weights(100, 0.8)
dist = RequestDistribution.shared(p, topo.client_weight)
rng = np.random.default_rng(0)
draws = dist.sample(0, rng, size=10_000)
print("head probability %.4f, empirical %.4f" % (p[0], np.mean(draws == 0)))
