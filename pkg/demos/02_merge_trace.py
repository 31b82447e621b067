"""Walk through the three-well merge protocol step by step.

Three neighboring wells (left, middle, right) are merged so that the
middle well ends up with exactly one ground-state atom whenever the
middle well was occupied or both neighbors were.  The trace below shows
each pulse acting on the well configurations for every binary input.
"""

import itertools

from mottprep import merge_protocol

for n_l, n_m, n_r in itertools.product((1, 0), repeat=3):
    outcome = merge_protocol(n_l, n_m, n_r)
    print(f"input (l,m,r) = ({n_l},{n_m},{n_r})  ->  "
          f"ground occupied: {outcome.ground_occupied}")
    print(outcome.format_trace())
    print()

print("Truth table: occupied  <=>  m or (l and r).")
print("A single vacancy among the three wells is healed; only two or")
print("three vacancies survive, which is what turns a vacancy fraction")
print("eps into 2*eps^2 - eps^3 per merge.")
