"""Resonance zones of quasi-periodically forced near-Hamiltonian oscillators."""
