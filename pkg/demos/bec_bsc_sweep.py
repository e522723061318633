"""Sweep the BEC/BSC model over beta and show where the bounds meet.

Run: python3 demos/bec_bsc_sweep.py
"""

import numpy as np

from skrates import becbsc
from skrates.models import classify_source_regime, regime_boundaries

ZETA, EPS = 0.01, 0.05

print(f"regime boundaries at eps={EPS}:", ", ".join(f"{b:.6f}" for b in regime_boundaries(EPS)))
table = becbsc.sweep(ZETA, EPS, np.linspace(0.0, 1.0, 21))
print(f"{'beta':>5} {'regime':>13} {'outer':>9} {'i_sep':>9} {'i_sep_1l':>9} {'i_jscc':>9}")
for beta, outer, sep, sep1, joint in table.rows:
    regime = classify_source_regime(beta, EPS).name
    print(f"{beta:5.2f} {regime:>13} {outer:9.6f} {sep:9.6f} {sep1:9.6f} {joint:9.6f}")

gain = table.column("i_sep") - table.column("i_sep_1l")
k = int(np.argmax(gain))
print(f"largest two-layer gain {gain[k]:.4f} bits at beta={table.rows[k][0]:.2f}")
