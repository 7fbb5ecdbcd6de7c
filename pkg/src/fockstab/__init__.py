"""Desk-scale simulator of autonomous Fock-state stabilization in a driven
dissipative cavity-qubit-resonator system: full Lindblad dynamics, a reduced
birth-death rate model, and the measurement/error-mitigation pipeline."""

__version__ = "0.1.0"
