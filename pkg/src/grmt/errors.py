"""Exception hierarchy shared by every stage of the pipeline."""


class GRMTError(Exception):
    """Base class for all engine errors."""


# exact

class UnassignedSymbol(GRMTError):
    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(f"no value assigned to symbol {symbol}")


class UnresolvedIndex(GRMTError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"summation index {index} has no solution entry")


# expr

class DSLSyntaxError(GRMTError):
    def __init__(self, line, column, expected, found=None):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        msg = f"line {line}, column {column}: expected {expected}"
        if found is not None:
            msg += f", found {found!r}"
        super().__init__(msg)


class DuplicateAlias(GRMTError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"alias {name!r} defined more than once")


class UnknownVariable(GRMTError):
    def __init__(self, name, line=None, column=None):
        self.name = name
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"unknown variable or alias {name!r}{where}")


class CyclicAlias(GRMTError):
    def __init__(self, chain):
        self.chain = tuple(chain)
        super().__init__("cyclic alias definition: " + " -> ".join(self.chain))


# series

class UnsupportedShape(GRMTError):
    pass


class NonPolynomialDenominator(GRMTError):
    pass


# theorem

class NonSquare(GRMTError):
    def __init__(self, n_vars, n_indices):
        self.n_vars = n_vars
        self.n_indices = n_indices
        super().__init__(
            f"{n_indices} summation indices for {n_vars} integration variables; "
            "only templates with as many series as integrals are supported"
        )


class SingularSystem(GRMTError):
    def __init__(self):
        super().__init__("exponent matrix is singular (det A = 0)")


class InvalidPairing(GRMTError):
    def __init__(self, variable, index):
        self.variable = variable
        self.index = index
        super().__init__(f"index n{index} does not occur in the exponent of variable {variable}")


# gammaeval

class PoleEncountered(GRMTError):
    def __init__(self, argument, value, where="numerator"):
        self.argument = argument
        self.value = value
        self.where = where
        super().__init__(f"Gamma pole in {where}: G[{argument}] at {value:g}")


class NegativeScaleBase(GRMTError):
    def __init__(self, base, value):
        self.base = base
        self.value = value
        super().__init__(f"scale base {base} evaluates to {value:g}, must be positive")


class TooManyPoles(GRMTError):
    pass


# oracle

class DivergenceSuspected(GRMTError):
    pass


class NonNumericParameter(GRMTError):
    pass


class UnsupportedOracle(GRMTError):
    """The problem is outside what the numerical oracle can check."""


# cli

class UnknownBuiltin(GRMTError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown builtin problem {name!r}")
