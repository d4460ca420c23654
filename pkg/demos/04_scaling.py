"""
Cost of one round of floods as the network grows
================================================

Node density stays fixed while ``n`` grows.  An all-node flood costs about
``n`` transmissions, so a round of ``n`` floods grows like ``n**2``.  A
restricted flood costs about its path length, so the round grows like
``n`` times the mean hop depth.
"""

from stair import scaling_experiment

out = scaling_experiment([25, 50, 100, 200, 300], width=2, seed=0)
print(f"{'n':>5} {'depth':>6} {'STAIR tx':>9} {'Glossy tx':>10}")
for r in out["rows"]:
    print(f"{r['n']:>5} {r['mean_depth']:6.2f} {r['stair_tx']:9d} {r['glossy_tx']:10d}")

c, r2 = out["glossy_fit"]
print(f"\nGlossy ~ {c:.2f} * n^2          (R^2 = {r2:.4f})")
c, r2 = out["stair_fit"]
print(f"STAIR  ~ {c:.2f} * n * depth    (R^2 = {r2:.4f})")
