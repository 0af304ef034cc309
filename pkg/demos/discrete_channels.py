"""Grid max-min capacity for three small binary channels with state.

The identity channel carries a full bit. When the jammer can XOR its symbol
onto the output it can mimic any codeword and the value drops to zero. When
the state is XORed on instead, an encoder that knows the state cancels it.

    python demos/discrete_channels.py
"""
import numpy as np

from dirtyavc import discrete
from dirtyavc.discrete import DiscreteAvcSpec


def kernel(fn):
    W = np.zeros((2, 2, 2, 2))  # W[x, s, j, y]
    for x in range(2):
        for s in range(2):
            for j in range(2):
                W[x, s, j, fn(x, s, j)] = 1.0
    return DiscreteAvcSpec(W, np.array([0.5, 0.5]))


channels = {
    "y = x": kernel(lambda x, s, j: x),
    "y = x xor j": kernel(lambda x, s, j: x ^ j),
    "y = x xor s": kernel(lambda x, s, j: x ^ s),
}
for name, spec in channels.items():
    res = discrete.solve_capacity(spec, 6, 6)
    print(f"{name:<12} value {res.value:.4f} bits, min-max {res.minmax_value:.4f}, "
          f"refined inner grid {res.refined_value:.4f}")
