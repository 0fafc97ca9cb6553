"""Exception hierarchy shared by the computational modules and the CLI.

Each class carries the process exit code the command line front end uses
when it is raised out of a command.
"""


class InterlinkError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ParseError(InterlinkError, ValueError):
    """Malformed input: bad JSON, wrong vector length, zero norm, bad mask."""

    exit_code = 2


class CapError(InterlinkError, ValueError):
    """A size cap was exceeded (qubit count, free qubits, chain length)."""

    exit_code = 3


class NumericError(InterlinkError, ArithmeticError):
    """A numerical invariant failed (non-unitary, non-Hermitian, no convergence)."""

    exit_code = 4
