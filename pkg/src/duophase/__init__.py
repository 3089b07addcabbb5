"""duophase: numerical toolkit for energy densities with unbalanced growth.

Implements, verifies on samples, and experimentally reproduces the
structure theory of double-phase-type functionals: spatial comparison
conditions, common-minimizer structure, the derived localization
property, mollified-energy convergence with per-node domination, radial
truncation identities, and a smooth-vs-full minimization gap probe.
"""

__version__ = "0.1.0"
