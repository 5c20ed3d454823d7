"""Memory noise and the fidelity of stored links.

Links decohere under a Pauli channel while they wait. The fidelity of a link
of a given age follows in closed form, and swapping two Bell-diagonal links
combines their error populations.

    python3 tutorials/05_memory_noise.py
"""

from repeaterlab import PauliChannelParams
from repeaterlab.noise import age_of_fidelity, bell_coefficients, fidelity_of_age, max_chain_for_fidelity, swap_bell_diagonal

m_star = 10
for m in (0, 2, 5, 10):
    print(f"age {m:>2}: fidelity {fidelity_of_age(m, m_star):.4f}")

params = PauliChannelParams(m1_star=20.0, m2_star=10.0)
a, b = bell_coefficients(3, params), bell_coefficients(5, params)
print("swapped populations:", [round(x, 4) for x in swap_bell_diagonal(a, b).q])

f_min = 0.9
print(f"links stay above F={f_min} for {age_of_fidelity(f_min, m_star)} steps;",
      f"with 2 steps per hop at most {max_chain_for_fidelity(f_min, 2, m_star)} hops fit")
