"""Verification workbench for a sequestered-encryption enclave.

ISA side: a small secure instruction language (lang) with executable
small-step semantics (interp), a two-point security type system (typecheck),
and a two-run noninterference checker (nicheck) over a salted permutation
cipher (crypto). RTL side: an FSM circuit IR with ciphertext declassification
(hwir), seven enclave design variants (enclaves), taint and two-trace
information-flow checkers (ift), and a salt-reuse extraction demo (attack).
"""

__version__ = "0.1.0"
