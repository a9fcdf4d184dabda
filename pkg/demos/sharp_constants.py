"""Sharp constants from the finite-element mode solver.

Prints the refinement trace for the classical ball (which approaches
N^2/4 = 2.25 from above and never attains it) and the critical-disk constant
A_a over a range of offsets a, which stays above 1/4 and falls toward it as
a -> 1.

    python3 demos/sharp_constants.py
"""

import math

from hardylab import ClassicalBall, CriticalDisk, ModeProblem, sharp_constant

ball = sharp_constant(ModeProblem(ClassicalBall(3), 1))
print("classical ball, N = 3, mode 1")
for row in ball.trace:
    print(f"  T = {row['T']:4.0f}  h = {row['h']:.3f}  value = {row['value']:.8f}")
print(f"  limit N^2/4 = 2.25, one-sided = {ball.one_sided}\n")

print("critical disk, mode 1")
print("      a        A_a      lower bound 1/4 + (log a)^2")
for a in (math.e, 2.0, 1.5, 1.1, 1.01):
    est = sharp_constant(ModeProblem(CriticalDisk(a), 1), k_max=1)
    print(f"  {a:7.4f}  {est.value:10.6f}  {0.25 + math.log(a) ** 2:10.6f}")
