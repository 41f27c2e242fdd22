"""Exception hierarchy shared across the package."""


class GenrecError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"


class IngestionError(GenrecError):
    """Raw interaction file could not be parsed (missing column, bad timestamp)."""

    category = "data"


class EmptyDatasetError(GenrecError):
    """Preprocessing filters removed every event."""

    category = "data"


class SplitError(GenrecError):
    """Holdout split is infeasible for at least one user."""

    category = "data"


class OutOfCatalogError(GenrecError):
    """An item ID outside the dense catalog range was passed to a model."""

    category = "data"


class CheckpointError(GenrecError):
    """Checkpoint file is malformed or inconsistent with its manifest."""

    category = "data"


class TrainingDivergedError(GenrecError):
    """Loss became non-finite during optimization."""

    category = "train"


class MaskedDistributionError(GenrecError):
    """Every catalog item is masked; nothing can be sampled or ranked."""

    category = "data"


class ContractViolationError(GenrecError):
    """An input violated a documented precondition (e.g. duplicate items)."""

    category = "data"


class ConfigError(GenrecError):
    """Run configuration is missing or has an invalid field."""

    category = "config"
