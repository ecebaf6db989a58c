"""Exception hierarchy shared by the kernel, elaborator and front end."""

from __future__ import annotations

from typing import Optional

Span = tuple[int, int]


class HottError(Exception):
    error_class = "error"

    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(message)
        self.message = message
        self.span = span


class LexError(HottError):
    error_class = "parse"


class ParseError(HottError):
    error_class = "parse"


class KernelError(HottError):
    error_class = "type"


class TypeMismatch(KernelError):
    def __init__(self, message: str, expected=None, actual=None, span: Optional[Span] = None):
        super().__init__(message, span)
        self.expected = expected
        self.actual = actual


class UnknownConstant(KernelError):
    pass


class DuplicateName(KernelError):
    pass


class PositivityError(KernelError):
    pass


class UniverseError(KernelError):
    pass


class InductiveError(KernelError):
    pass


class HitError(KernelError):
    pass


class ElabError(HottError):
    error_class = "type"


class UnificationError(ElabError):
    pass


class HigherOrderUnsupported(UnificationError):
    pass


class InstanceError(ElabError):
    pass


class InstanceDepthError(InstanceError):
    pass


class CoercionError(ElabError):
    pass


class DirectiveFailure(HottError):
    error_class = "directive"


class FuelExhausted(HottError):
    error_class = "type"


class ImportError_(HottError):
    error_class = "io"
