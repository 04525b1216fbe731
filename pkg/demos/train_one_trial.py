"""
One training run, Alice and Bob against Eve
===========================================

A short run on secp224r1 (pass --epochs 20 for the full schedule). Losses are
printed once per epoch and the run ends with the same fresh-batch accuracy
check the experiment runner uses.
"""

import argparse

import numpy as np

from eccanc.experiment import run_trial

ap = argparse.ArgumentParser()
ap.add_argument("--curve", default="secp224r1")
ap.add_argument("--eve-cycles", type=int, default=1)
ap.add_argument("--epochs", type=int, default=3)
ap.add_argument("--plot", help="save the loss curves to this image file")
args = ap.parse_args()

t = run_trial(args.curve, args.eve_cycles, seed=1, overrides={"n_epochs": args.epochs})
abe, bob, eve = t.trace.T
per_epoch = len(abe) // args.epochs
for e in range(args.epochs):
    sl = slice(e * per_epoch, (e + 1) * per_epoch)
    print(f"epoch {e + 1:2d}  ABE {abe[sl].mean():.3f}  Bob {bob[sl].mean():.3f}  "
          f"Eve {eve[sl].mean():.3f}")

print(f"\nfinal  ABE {t.final_abe_loss:.3f}  Bob {t.final_bob_loss:.3f}  Eve {t.final_eve_loss:.3f}")
print(f"accuracy on a fresh batch: Bob {t.bob_accuracy:.2f}%  Eve {t.eve_accuracy:.2f}%")

# slope of the ABE loss over the first half of the run
half = abe[: len(abe) // 2]
print("first-half ABE slope:", np.polyfit(np.arange(len(half)), half, 1)[0])

if args.plot:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    for series, label in ((abe, "ABE"), (bob, "Bob"), (eve, "Eve")):
        ax.plot(series, label=label, lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("L1 loss (bits)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.plot, dpi=120)
    print("saved", args.plot)
