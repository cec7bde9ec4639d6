"""Exact-arithmetic PCTL workbench.

Modules:

* ``formula``   -- hash-consed PCTL AST, parser, printer
* ``markov``    -- finite chains with exact rational rows, file format
* ``checker``   -- exact satisfaction sets and path-formula probabilities
* ``geometry``  -- the Inc/Dec counter encoding and its validators
* ``machines``  -- counter machines, Minsky machines, lasso detection
* ``reduction`` -- machine-to-formula compiler (U and F,G fragments)
* ``witness``   -- finite witness chain synthesis from lasso computations
* ``cli``       -- the ``pctlwb`` command-line frontend
"""

__version__ = "0.1.0"
