"""Route a target on a small instance and watch the primal-dual state converge.

Run with ``python demos/walkthrough.py``.
"""

import numpy as np

from augflow import SolverConfig, dinic_max_flow, generate_instance, route_target

g = generate_instance("grid", 3, 4, 5, seed=1)
best = dinic_max_flow(g).value
print(f"3x4 grid: {g.n} nodes, {g.m} arcs, max flow {best}")

# a routable target: alpha climbs to one while the coupling stays tight
ok = route_target(g, best, "basic", SolverConfig(validate=True))
steps = [t for t in ok.trace if t.event == "progress"]
print(f"target {best}: {ok.status} after {len(steps)} progress steps")
for t in steps[:: max(1, len(steps) // 6)]:
    print(f"  iter {t.iter:5d}  alpha {t.alpha:.4f}  energy {t.energy:10.2f}  |gamma| {t.gamma2:.1e}")
print("  flow on each arc:", np.asarray(ok.flow, dtype=int).tolist())

# one unit too many: the duals blow up until they certify that it cannot be done
no = route_target(g, best + 1, "basic", SolverConfig(validate=True))
c = no.certificate
print(f"target {best + 1}: {no.status} at alpha {c.alpha:.4f}, "
      f"F(y_t - y_s) = {c.lhs:.1f} > 2m/(1-alpha) = {c.rhs:.1f}")
