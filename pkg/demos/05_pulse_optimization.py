"""Trade off pulse speed against spectator excitation and excited-state loss.

A fast pi pulse addresses its target strongly but also tickles spectator
atoms detuned by 0.125 U00; a slow pulse is selective but exposes the
transferred atom to loss for longer.  The optimizer balances the two, and
the commensurate branch (pulse time tuned so the spectator Rabi cycle
closes exactly) removes the spectator error entirely.
"""

from mottprep import LossModel, fit_loss_weight, optimize_pulse

for u00_hz in (1000.0, 20000.0):
    opt = optimize_pulse(LossModel(tau_s=1.0, u00_hz=u00_hz))
    print(f"U00 = {u00_hz / 1000:g} kHz, tau = 1 s:")
    print(f"  grid optimum      : t = {opt.t_s * 1e3:6.2f} ms, "
          f"eps = {opt.eps_total:.3e} "
          f"(spectator {opt.eps_spectator:.1e}, loss {opt.eps_loss:.1e})")
    print(f"  commensurate      : t = {opt.commensurate_t_s * 1e3:6.2f} ms, "
          f"eps = {opt.commensurate_eps_total:.3e}")
    print()

fit = fit_loss_weight()
print(f"Loss weight best matching the reference operating points: "
      f"w = {fit['w_loss']:.3f}")
for pt in fit["points"]:
    print(f"  U00 = {pt['u00_hz'] / 1000:g} kHz: "
          f"t = {pt['t_opt_s'] * 1e3:.2f} ms (ref {pt['t_ref_s'] * 1e3:.0f} ms), "
          f"eps = {pt['eps_opt']:.2e} (ref {pt['eps_ref']:.0e})")
