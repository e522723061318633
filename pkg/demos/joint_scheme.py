"""Run the joint source-channel key agreement scheme at short blocklength.

Rates are placed a margin inside (or outside) the scheme's conditions and
the trial outcomes are summarized. At n = 10 the packing slack is only a
bit or two, so agreement improves slowly with the margin.
"""

from skrates.models import BinaryStateModel
from skrates.region import prop9_aux
from skrates.scheme_sim import JointSimConfig, joint_rates_inside, run_joint_experiment

model = BinaryStateModel(a=0.25, zeta=0.1, beta=0.2, epsilon=0.8)
aux = prop9_aux()
for n, margin in [(10, -0.15), (10, 0.15), (10, 0.45), (5, 0.15)]:
    r = joint_rates_inside(model, aux, n, margin)
    cfg = JointSimConfig(
        n=n, model=model, delta=0.2, trials=300, seed=7, **{k: r[k] for k in ("R1", "R2", "Rf", "Rk", "eps_tilde")}
    )
    rep = run_joint_experiment(cfg, aux)
    print(
        f"n={n:2d} margin={margin:+.2f}: agreement {rep.agreement_rate:.3f}  decode error {rep.decode_error_rate:.3f}"
        f"  encode failure {rep.encode_failure_rate:.3f}  leakage {rep.leakage_bits_per_symbol:.3f} ({rep.leakage_method})"
    )
