"""Finite, checkable models of eventually periodic families, their filters,
and the multi-sorted structures built from them.

Modules: ``indexing`` (directed orders), ``functions`` (eventually
periodic functions and families), ``sharp`` (coherent selections and their
filters), ``structures`` (the H/M structures), ``limit`` (isomorphisms of
the limit structures), ``aec`` (the class K_σ), plus scenario loading,
claim suites and the ``tamelab`` command.
"""

__version__ = "0.1.0"
