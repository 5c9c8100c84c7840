"""Tour of the synthetic process generators.

Generates one realization of each family with its study defaults, prints a
few summary statistics, and (if matplotlib is installed) saves a figure with
all sample paths.  Everything is seeded, so the output is reproducible.

Run:  python demos/01_processes.py
"""

import numpy as np

import leaderlab as ll

SEED = ll.RngSpec(2024)

signals = {
    "fBm H=0.4": ll.gen_fbm(0.4, 1 << 14, SEED.substream(0)),
    "fBm H=0.7": ll.gen_fbm(0.7, 1 << 14, SEED.substream(1)),
    "MRW H=0.6, beta=0.05": ll.gen_mrw(0.6, 0.05, 1 << 14, 1 << 14,
                                       SEED.substream(2)),
    "log-normal cascade mu=0.37": ll.gen_cmc_motion(0.37, 14,
                                                    SEED.substream(3)),
    "CPC log-normal": ll.gen_cpc_motion("ln", 100.0, 0.02, 1 << 14,
                                        SEED.substream(4)),
    "CPC log-Poisson w=1.5": ll.gen_cpc_motion("lp", 100.0, 0.02, 1 << 14,
                                               SEED.substream(5)),
    "random wavelet series a=1, b=2": ll.gen_rws(1.0, 2.0,
                                                 ll.daubechies_basis(3), 13,
                                                 SEED.substream(6)),
}

for name, sig in signals.items():
    inc = np.diff(sig.samples)
    print(f"{name:34s} n={len(sig):6d}  range=[{sig.samples.min():+.3f}, "
          f"{sig.samples.max():+.3f}]  mean|increment|={np.abs(inc).mean():.4g}")

# the generalized Gaussian coefficient law behind the wavelet series
for beta in (0.5, 1.0, 2.0):
    x = ll.sample_gen_gaussian(beta, 200_000, SEED.substream(10 + int(2 * beta)))
    print(f"generalized Gaussian beta={beta}: var={x.var():.4f}  "
          f"E|X|={np.abs(x).mean():.4f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    fig, axes = plt.subplots(len(signals), 1, figsize=(8, 2 * len(signals)),
                             sharex=False)
    for ax, (name, sig) in zip(axes, signals.items()):
        ax.plot(sig.times, sig.samples, lw=0.5)
        ax.set_title(name, fontsize=9)
    fig.tight_layout()
    fig.savefig("demo01_processes.png", dpi=110)
    print("wrote demo01_processes.png")
