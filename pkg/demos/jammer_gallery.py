"""Does knowing the state help the jammer?

Runs the binned dirty-paper code at 0.8 C with n = 100 against each shipped
jammer and prints the maximal error rate with its Wilson interval. The
state-aware jammers land in the same band as the blind sphere jammer.

    python demos/jammer_gallery.py [trials]
"""
import sys

from dirtyavc import SystemParams, derive_constants, montecarlo
from dirtyavc.jammer import shipped_strategies

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 500
params = SystemParams(P=1.0, Lam=1.0, noise_var=1.0, state_var=1.0, n=100)
C = derive_constants(params).C

res = montecarlo.rate_sweep(params, [0.8 * C], [100], shipped_strategies(), trials, messages=4, seed=1)
print(f"R = 0.8 C = {0.8 * C:.4f} bits/use, n = 100, {trials} trials x 4 messages")
print(f"{'jammer':<34}{'max error':>10}{'95% CI':>20}{'mean <y,u>':>12}")
for row in res.rows:
    print(f"{row.jammer:<34}{row.error_rate:>10.4f}   [{row.ci_low:.4f}, {row.ci_high:.4f}]"
          f"{row.mean_corr:>12.4f}")
print(f"theta = {derive_constants(params).theta:.4f} is where <y,u> settles as n grows")
