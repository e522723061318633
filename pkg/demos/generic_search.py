"""Search the general outer region numerically and compare with the closed form.

In the unordered regime the search finds auxiliaries above the closed-form
outer expression, which relies on Bob's source being less noisy than Eve's.
"""

from skrates import becbsc
from skrates.models import BecBscModel
from skrates.region import becbsc_system, optimize_generic

for beta in (0.05, 0.3):
    m = BecBscModel(zeta=0.01, beta=beta, epsilon=0.05)
    res = optimize_generic(becbsc_system(m), "outer", {"T": 2, "U": 2, "V": 3}, restarts=16, seed=0)
    print(f"beta={beta}: closed form {becbsc.outer_bound(m).rk:.6f}  generic search {res.rk:.6f}")
