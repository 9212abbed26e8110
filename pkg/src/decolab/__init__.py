"""Numerical toolkit for decoherence and open-quantum-system dynamics.

Submodules
----------
operator_core   dense operators, superoperators, metrics
channels        Kraus maps, POVMs, efficient and indirect measurements
dephasing       exact spin-boson pure dephasing and N-qubit scaling
lindblad        Markovian generators, propagation, closed-form model oracles
trajectories    quantum-jump unravelling and record calculus
weak_coupling   Born-Markov-secular generator construction
collisional     scattering-induced decoherence rates
pointer_states  predictability sieve and the nonlinear robust-state flow
cli             scenario runner (`decolab` console script)

All module APIs use natural units hbar = k_B = 1; the CLI owns SI conversion.
"""

__version__ = "0.1.0"
