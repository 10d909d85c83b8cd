"""The midpoint convexity protocol, step by step.

Perturb a trained weight tensor twice, evaluate the loss at both
endpoints and at their midpoint, and check the convexity inequality
loss(mid) <= (loss(A1) + loss(A2)) / 2. Repeated 100 times.

Run:  python3 demos/convexity_walkthrough.py
"""

from convexattn import SynthConfig, convexity_check, preset_config, synth_generate, train
from convexattn.numutil import RngStream

ds = synth_generate(SynthConfig(kind="tap", samples_per_class=25, seed=0))
X, y = ds.stacked()

# One model per loss: each loss is checked around its own minimizer,
# where the midpoint margin is widest.
for loss_kind in ("hinge", "squared"):
    cfg = preset_config("tap-tuned", seed=0, loss_kind=loss_kind)
    bundle, _ = train(ds, cfg)
    rep = convexity_check(
        bundle, X, y, trials=100, noise_stddev=0.1, rng=RngStream(0),
        loss_kind=loss_kind,
    )
    verdict = "ok" if rep.passed else "VIOLATED"
    print(f"{loss_kind:8s}: {rep.satisfied}/{rep.trials} trials satisfied "
          f"[{verdict}]")
    print(f"          mean violation {rep.mean_violation:+.3e} "
          f"(negative = strict), max {rep.max_violation:+.3e}")
