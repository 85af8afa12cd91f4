"""System noise factor of an active receiving antenna.

With a strong ambient noise floor the antenna's own noise hardly matters,
and enough antenna gain hides the receiver behind it. This prints a gain
sweep for a 10 dB receiver and the largest antenna noise factor that keeps
the system within 3 dB of the ambient floor.
"""

import numpy as np

from cdetsim import noisefig as nf

f_ambient = nf.linear(20.0)  # e.g. HF band, ambient 20 dB above kTB
f_antenna = nf.linear(3.0)
f_receiver = nf.linear(10.0)

print("%7s  %9s  %11s  %14s" % ("G_a dB", "F_S dB", "approx dB", "max F_ant dB"))
for g_db in np.arange(-20.0, 21.0, 5.0):
    g = nf.linear(g_db)
    exact = nf.system_nf(nf.NoiseFigureParams(f_ambient, f_antenna, f_receiver, g))
    approx = nf.approx_system_nf(f_ambient, f_antenna)
    bound = nf.antenna_nf_bound(f_ambient, f_receiver, g)
    limit = "%14.2f" % nf.db(bound) if bound >= 1 else "%14s" % "infeasible"
    print("%7.1f  %9.3f  %11.3f  %s" % (g_db, nf.db(exact), nf.db(approx), limit))

# Dropping the receiver term is accurate once the gain is high: the gap between
# the two middle columns closes as G_a rises.
# Below about -10 dB of gain even a noiseless antenna cannot meet the target.

print()
print("worked point F_A=101, F_a=2, F_r=10, G_a=1:",
      nf.system_nf(nf.NoiseFigureParams(101, 2, 10, 1)))
