"""Error hierarchy shared by the compiler, the runtime and the backends."""

from typing import Optional


class MtpError(Exception):
    """Base class for every error raised by the toolkit."""


# -------------------- Frontend --------------------
class FrontendError(MtpError):
    """Lexing, parsing or import resolution failed."""


class LexError(FrontendError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{line}:{column}: {message}")


class ParseError(FrontendError):
    def __init__(self, line: int, column: int, expected: str, found: str):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"{line}:{column}: expected {expected}, found {found}")


class ModuleImportError(FrontendError):
    """An import could not be resolved or closes a cycle."""

    def __init__(self, module: str, importer: Optional[str], reason: str = "cannot be resolved"):
        self.module = module
        self.importer = importer
        self.reason = reason
        where = f" (imported by {importer})" if importer else ""
        super().__init__(f"module '{module}'{where} {reason}")


# -------------------- Registry --------------------
class RegistryError(MtpError):
    """Semantic registry construction failed."""


class UnresolvedNameError(RegistryError):
    def __init__(self, name: str, use_loc: tuple, context: str = ""):
        self.name = name
        self.use_loc = use_loc
        self.context = context
        module, line, column = use_loc
        suffix = f" ({context})" if context else ""
        super().__init__(f"{module}:{line}:{column}: unresolved name '{name}'{suffix}")


class DuplicateDefinitionError(RegistryError):
    def __init__(self, name: str, scope: str, loc: tuple):
        self.name = name
        self.scope = scope
        self.loc = loc
        module, line, column = loc
        super().__init__(f"{module}:{line}:{column}: '{name}' is already defined in {scope}")


class MisplacedByError(RegistryError):
    def __init__(self, callee: str, loc: tuple):
        self.callee = callee
        self.loc = loc
        module, line, column = loc
        super().__init__(
            f"{module}:{line}:{column}: 'by' on a call of '{callee}', which is not a class"
        )


# -------------------- MT-IR / prompt --------------------
class FormatError(MtpError):
    """A serialized MT-IR document is malformed."""

    def __init__(self, offset: int, message: str):
        self.offset = offset
        self.message = message
        super().__init__(f"byte {offset}: {message}")


class ArityError(MtpError):
    """Bound values do not match the call-site parameters."""


# -------------------- Runtime --------------------
class MtpRuntimeError(MtpError):
    """The interpreter hit an error while executing the program."""

    def __init__(self, message: str, site: Optional[str] = None):
        self.site = site
        super().__init__(f"{site}: {message}" if site else message)


class ArgTypeError(MtpError):
    """Inputs to a by-call violate the declared types; raised before any model call."""

    def __init__(self, site_id: str, diagnostic: str):
        self.site_id = site_id
        self.diagnostic = diagnostic
        super().__init__(f"{site_id}: {diagnostic}")


class MtpTypeError(MtpError):
    """The model never produced a value of the expected type."""

    def __init__(self, site_id: str, attempts: int, last_diagnostic: str):
        self.site_id = site_id
        self.attempts = attempts
        self.last_diagnostic = last_diagnostic
        super().__init__(
            f"{site_id}: no conforming output after {attempts} attempt(s); last error: {last_diagnostic}"
        )


# -------------------- Backends --------------------
class BackendError(MtpError):
    """A model backend could not produce a completion."""


class ScriptExhausted(BackendError):
    def __init__(self, calls: int):
        self.calls = calls
        super().__init__(f"mock script exhausted after {calls} call(s)")


class ReplayMismatch(BackendError):
    def __init__(self, index: int, diff_summary: str):
        self.index = index
        self.diff_summary = diff_summary
        super().__init__(f"replay request #{index} does not match the recording:\n{diff_summary}")


class ReplayExhausted(BackendError):
    def __init__(self, recorded: int):
        self.recorded = recorded
        super().__init__(f"replay file holds only {recorded} exchange(s)")


class TransportError(BackendError):
    """The provider could not be reached within the backoff budget."""


class ProviderError(BackendError):
    def __init__(self, status: int, body_excerpt: str):
        self.status = status
        self.body_excerpt = body_excerpt
        super().__init__(f"provider returned HTTP {status}: {body_excerpt}")


class BackendConfigError(BackendError):
    """A backend is missing configuration (API key, binding, script)."""


def exit_code(error: MtpError) -> int:
    """Process exit status for an error: 1 type errors, 2 program errors, 3 backend errors."""
    if isinstance(error, (MtpTypeError, ArgTypeError)):
        return 1
    if isinstance(error, BackendError):
        return 3
    return 2
