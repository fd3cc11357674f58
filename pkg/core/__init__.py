"""Numerical core of the Sato-Tate lab: special functions, measures, Euler products, tails."""
