"""Bounds for the binary and Gaussian channels whose state is the common source."""

from skrates import state
from skrates.models import BinaryStateModel, GaussianStateModel

print("binary state, a=0.5 zeta=0.1")
for beta, eps in [(0.0, 0.0), (0.2, 0.3), (0.5, 0.8)]:
    m = BinaryStateModel(a=0.5, zeta=0.1, beta=beta, epsilon=eps)
    print(f"  beta={beta} eps={eps}: outer {state.binary_state_outer(m).rk:.6f}  inner {state.binary_state_inner(m).rk:.6f}")

print("Gaussian, P=1 N1=0.5 N2=1")
for Q in (0.1, 1.0, 10.0, 1e6):
    m = GaussianStateModel(P=1.0, Q=Q, N1=0.5, N2=1.0)
    outer = state.gaussian_outer(m).rk
    closed = state.gaussian_inner_closed(m).rk
    full = state.gaussian_inner_full(m)
    print(
        f"  Q={Q:g}: outer {outer:.6f}  closed {closed:.6f}  full {full.rk:.6f}"
        f" (rho {full.aux['rho']:.4f}, gamma {full.aux['gamma']:.4f})  gap {outer - closed:.6f}"
    )
