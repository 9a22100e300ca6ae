# %% [markdown]
# # Sweeping the detuning
#
# Repeat the amplitude sweep while moving the target frequency. The fitted
# slopes trace `mu` versus detuning; the plateaus trace the saturation rate.
# A coarse grid keeps this to well under a minute.

# %%
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from crosskit import REFERENCE_DEVICE
from crosskit.pipeline import SweepSettings, detuning_sweep

dev = REFERENCE_DEVICE
grid = np.arange(-300, 501, 40.0)
res = detuning_sweep(dev, grid, SweepSettings())
print("excluded:", res.excluded)

# %% [markdown]
# ## Slopes next to theory

# %%
for p in res.mu.points:
    print(f"{p.delta:+6.0f} MHz  measured {p.measured:+.5f} +/- {p.ci95:.5f}  "
          f"numeric {p.numeric:+.5f}  closed form {p.theory:+.5f}")
sf = res.mu.scale_factor
print(f"scale factor against numeric theory: {sf.scale:.4f} +/- {sf.ci95:.4f}")

d = np.array([p.delta for p in res.mu.points])
fig, ax = plt.subplots(figsize=(6, 4))
ax.errorbar(d, [p.measured for p in res.mu.points], [p.ci95 for p in res.mu.points], fmt="o", ms=3,
            label="simulated")
ax.plot(d, [p.numeric for p in res.mu.points], "-", label="exact dressing")
ax.set_xlabel("detuning (MHz)")
ax.set_ylabel("mu")
ax.legend()
fig.tight_layout()
fig.savefig("mu_sweep.svg")

# %% [markdown]
# ## Saturation
#
# Levels stay near or below `J` except close to resonance, where the
# dressed picture itself breaks down.

# %%
for p in res.saturation.points:
    print(f"{p.delta:+6.0f} MHz  plateau {p.level:.3f} +/- {p.ci95:.3f} MHz")
for v in res.saturation.violations:
    print("above J:", v)
