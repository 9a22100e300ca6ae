# %% [markdown]
# # Cross-resonance Rabi oscillations and J_eff
#
# Drive the control at the target frequency and watch the target flop. The
# flop rate depends on the control state; half the difference of the two
# rates is `J_eff`. At small amplitude it grows linearly with slope `mu`, at
# large amplitude it levels off.

# %%
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from crosskit import REFERENCE_DEVICE
from crosskit.dynamics import cr_carrier, dressed_basis, simulate_cr_rabi
from crosskit.fitting import fit_damped_sinusoid
from crosskit.perturbation import cr_coefficients
from crosskit.pipeline import SweepSettings, amplitude_sweep

dev = REFERENCE_DEVICE
dressing = dressed_basis(dev)
carrier = cr_carrier(dev, dressing=dressing, reference="mean")

# %% [markdown]
# ## One amplitude, both control states
#
# A small direct crosstalk (10% of the tone reaching the target) keeps both
# traces rotating the same way, so their frequency difference is `2 mu eps`.

# %%
eps = 4.0
t = np.linspace(0, 20_000, 801)
fig, ax = plt.subplots(figsize=(7, 3.5))
freqs = {}
for excited in (False, True):
    tr = simulate_cr_rabi(dev, eps, t, excited, crosstalk=0.1, carrier=carrier, dressing=dressing)
    fit = fit_damped_sinusoid(t, tr.p_excited)
    freqs[excited] = fit.frequency
    ax.plot(t * 1e-3, tr.p_excited, label=f"control {int(excited)}: {fit.frequency:.4f} MHz")
ax.set_xlabel("CR pulse length (us)")
ax.set_ylabel("target excited population")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("rabi_traces.svg")

mu = cr_coefficients(dev, "numeric").mu
print(f"J_eff = {(freqs[True] - freqs[False]) / 2:.5f} MHz, mu * eps = {mu * eps:.5f} MHz")

# %% [markdown]
# ## J_eff against amplitude
#
# The default amplitude grid runs from 0.5 to 250 MHz. Each point gets its
# own pulse-length window covering a few Rabi periods.

# %%
res = amplitude_sweep(dev, settings=SweepSettings())
curve = res.curve
print(f"linear prefix: {curve.prefix_len} points, slope {curve.slope:.5f} +/- {curve.slope_ci95:.5f}")
print(f"numeric mu {mu:.5f}")
if curve.saturation:
    s = curve.saturation
    print(f"plateau {s.level:.3f} +/- {s.ci95:.3f} MHz (J = {dev.coupling_j} MHz)")

a = curve.amplitudes
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(a, curve.jeff, "o", ms=3)
ax.plot(a[: curve.prefix_len], curve.slope * a[: curve.prefix_len], "-", label="linear fit")
if curve.saturation:
    ax.axhline(curve.saturation.sign * curve.saturation.level, ls="--", color="C2", label="plateau")
ax.axhline(dev.coupling_j, color="r", lw=0.7, label="J")
ax.set_xscale("log")
ax.set_xlabel("CR amplitude (MHz)")
ax.set_ylabel("J_eff (MHz)")
ax.legend()
fig.tight_layout()
fig.savefig("jeff_curve.svg")
for line in curve.diagnostics[:5]:
    print(line)
