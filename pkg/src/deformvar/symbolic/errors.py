"""Exceptions raised by the symbolic layer."""


class SymbolicError(Exception):
    pass


class UnboundSymbol(SymbolicError, KeyError):
    def __str__(self):
        return f"unbound symbol: {self.args[0]}" if self.args else "unbound symbol"


class EvalSingularity(SymbolicError, ArithmeticError):
    pass


class AllPointsSingular(SymbolicError):
    pass


class ParseError(SymbolicError, ValueError):
    def __init__(self, message: str, position: int = -1):
        super().__init__(message, position)
        self.message = message
        self.position = position

    def __str__(self):
        if self.position >= 0:
            return f"{self.message} (at position {self.position})"
        return self.message
