"""Print the relative interaction strengths between vibrational levels.

Two atoms sharing a well interact with a strength that depends on which
vibrational levels they occupy.  Normalized to the ground-ground value,
the matrix is what makes number-selective addressing possible: each
occupation number n shifts the transition by a distinct multiple of U00.
"""

from mottprep import InteractionMatrix

matrix = InteractionMatrix.compute()

print("U(nu, mu) / U(0, 0)")
header = "      " + "".join(f"  mu={mu}   " for mu in range(5))
print(header)
for nu in range(5):
    cells = "".join(f"{matrix[nu, mu]:8.5f} " for mu in range(5))
    print(f"nu={nu} {cells}")

print()
print("Spectroscopic consequence: removing the n-th atom from an n-fold")
print("occupied well uses a pulse detuned by -(n-1)/4 U00, so every")
print("occupation number has its own resonance.")
for n in range(2, 6):
    print(f"  n={n}: shift = {-(n - 1) / 4:+.2f} U00")
