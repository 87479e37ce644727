"""Exception hierarchy for the subnet-hpo package."""


class SubnetHpoError(Exception):
    """Base class for all package errors."""


# --- space ---

class DuplicateName(SubnetHpoError):
    """A hyperparameter name appears more than once in a space."""


class EmptyGroup(SubnetHpoError):
    """A declared group owns no hyperparameters."""


class BadBounds(SubnetHpoError):
    """Invalid bounds (lo >= hi, log scale with lo <= 0, empty choices)."""


class UnknownGroup(SubnetHpoError):
    """A group id does not exist in the space."""


class MissingGroup(SubnetHpoError):
    """A group assignment required for composition is absent."""


class OverlappingNames(SubnetHpoError):
    """Partial assignments overlap or carry names outside their group."""


# --- tpe ---

class EmptyInput(SubnetHpoError):
    """An operation received an empty sequence it cannot handle."""


class EmptyObservations(EmptyInput):
    """KDE fitting requires at least one observation."""


class DimensionMismatch(SubnetHpoError):
    """Encoded vector length does not match the model's dimensionality."""


class InsufficientObservations(SubnetHpoError):
    """TPE proposals need at least dim + 1 observations."""


class EmptyRestriction(SubnetHpoError):
    """A focal restriction lists no allowed entries for a group."""


# --- sched ---

class NoGroupLosses(SubnetHpoError):
    """Importance requires per-group losses for every group."""


class UnknownSourceTrial(SubnetHpoError):
    """A transfer plan references a trial id absent from the history."""


class BudgetTooSmall(SubnetHpoError):
    """Resource budget is below the cost of a single complete trial."""


# --- surrogate ---

class GroupCountMismatch(SubnetHpoError):
    """Surrogate spec and space disagree on the number of subnet groups."""


class HashMismatch(SubnetHpoError):
    """A frozen state does not correspond to the config's group assignment."""


# --- metrics ---

class EmptyHistory(SubnetHpoError):
    """Metrics require at least one trial."""


class LevelNotReached(SubnetHpoError):
    """A regret curve never attains the requested level."""


class UnpairedRuns(SubnetHpoError):
    """Baseline and method runs cannot be paired by seed/fold."""


# --- cli ---

class ParseError(SubnetHpoError):
    """The experiment config file is not well-formed."""


class UnknownKey(SubnetHpoError):
    """The experiment config contains an unrecognized key."""


class ValidationError(SubnetHpoError):
    """An experiment config value is out of range or missing."""


class ResumeMismatch(SubnetHpoError):
    """An existing journal was produced by a different experiment plan."""
