class InputError(ValueError):
    """Malformed or out-of-contract input (shapes, signs, preconditions)."""


class EvalError(ArithmeticError):
    """An evaluation hit a singular matrix."""
