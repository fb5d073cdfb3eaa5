"""
Form Compiler Errors - exception hierarchy shared by every module
"""


class FormCompilerError(Exception):
    """Base class for all compiler failures"""
    exit_code = 1


class ElementError(FormCompilerError):
    """Unsupported cell, degree or derivative request"""


class QuadratureError(FormCompilerError):
    """A quadrature rule could not be constructed to full accuracy"""


class FormSyntaxError(FormCompilerError):
    """Malformed .form source, carries the 1-based line/column"""
    exit_code = 2

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class FormError(FormCompilerError):
    """Well-formed source that does not describe a multilinear form"""
    exit_code = 2


class LoweringError(FormCompilerError):
    """Corrupted IR found while lowering a monomial"""


class ReferenceTensorError(FormCompilerError):
    """Reference tensor could not be computed"""


class MemoryGuardError(ReferenceTensorError):
    """Requested tensor is larger than the configured entry cap"""
    exit_code = 4

    def __init__(self, required, limit):
        self.required = required
        self.limit = limit
        super().__init__(
            f"reference tensor needs {required:,} entries, "
            f"above the limit of {limit:,} (raise --max-entries)"
        )


class GeometryError(FormCompilerError):
    """Degenerate cell or inconsistent coefficient data"""


class DofMapError(FormCompilerError):
    """Mesh and element do not give a consistent degree-of-freedom map"""


class ProgramError(FormCompilerError):
    """Contraction program is malformed or cannot be evaluated"""
    exit_code = 3


class VerificationError(FormCompilerError):
    """Compiled program disagrees with the quadrature oracle"""
    exit_code = 3


class UsageError(FormCompilerError):
    """Bad command-line usage"""
