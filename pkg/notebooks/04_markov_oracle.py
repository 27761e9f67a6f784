"""
Checking the buffer against an exact Markov chain
=================================================

With Bernoulli arrivals and one PDU served per slot, a small buffer is a
finite Markov chain. Its stationary law gives exact loss probabilities which
the simulator's queue code has to reproduce.
"""

from hsdpa_tsp.oracle import OracleModel, OracleVariant, compare_with_sim, solve

model = OracleModel(n=4, r=2, p_rt=0.3, p_nrt=0.5)
res = solve(model)
print(f"{len(res.states)} states, converged after {res.iterations} iterations "
      f"(residual {res.residual:.1e})")
for (i, j), p in zip(res.states, res.stationary):
    if p > 1e-6:
        print(f"  P(rt={i}, nrt={j}) = {p:.5f}")
print(f"exact NRT loss {res.nrt_drop_prob:.5f}, RT blocking {res.rt_block_prob:.2e}")

for c in compare_with_sim(model, 200_000):
    print(f"{c.metric:<9} exact {c.exact:.5f}  simulated {c.simulated:.5f}  "
          f"bound {c.bound:.5f}  {'ok' if c.passed else 'FAIL'}")

# without push-out an RT PDU can meet a buffer filled by NRT, so it is blocked more often
for v in OracleVariant:
    r = solve(OracleModel(8, 4, 0.9, 0.9, v))
    print(f"{v.value:<15} RT blocking {r.rt_block_prob:.2e}  NRT loss {r.nrt_drop_prob:.4f}")
