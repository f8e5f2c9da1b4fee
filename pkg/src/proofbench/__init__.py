"""Verifying kernel and workbench for program-derivation proofs on a
bounded machine: parse formal statements, enumerate and apply rule-driven
derivation steps, verify and extract theorems, and execute programs
concretely for empirical soundness checking."""

__version__ = "0.1.0"
