"""Base class for the immutable domain models."""
from pydantic import BaseModel, ConfigDict


class FrozenModel(BaseModel):
    """Immutable pydantic model that accepts Fraction and frozenset fields."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
