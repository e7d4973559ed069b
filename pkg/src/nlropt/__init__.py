"""Training toolkit for small variational quantum circuits.

Exact dense simulation, parameter-shift gradients, a reversal-on-violation
optimizer with baselines, synthetic plateau testbeds with diffusion and
first-passage verifiers, and a deterministic experiment harness.
"""

__version__ = "0.1.0"
