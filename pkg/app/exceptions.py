#Exception hierarchy

class PlannerError(Exception):
    """
    Base exception class for planner errors
    """
    pass

class ValidationError(PlannerError):
    """
    Raised when user input validation fails
    """
    pass

class LevelParseError(ValidationError):
    """
    Raised when a level file is malformed or violates a level invariant
    """
    pass

class ConfigurationError(PlannerError):
    """
    Raised when configuration settings are invalid
    """
    pass

class RegistryError(PlannerError):
    """
    Raised on a duplicate, unknown or inconsistent semantic variable name
    """
    pass

class ContractError(PlannerError):
    """
    Raised when an operation is called with arguments outside its contract
    """
    pass

class BackendError(PlannerError):
    """
    Raised when a SAT backend fails, as opposed to running out of time
    """
    pass

class SerializationError(PlannerError):
    """
    Raised when a parallel step cannot be turned into a move sequence
    """
    pass

class PlanValidationError(PlannerError):
    """
    Raised when the simulator rejects a decoded plan
    """
    pass

class FixtureError(PlannerError):
    """
    Raised when a fixture cannot be frozen or loaded
    """
    pass
