"""Exact solutions of the radial Schrodinger equation for a (12,6) Lennard-Jones potential."""
