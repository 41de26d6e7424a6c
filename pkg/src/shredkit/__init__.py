"""Compiler from higher-arity existential rules to arity-two GC2 query answering."""

__version__ = "0.1.0"
