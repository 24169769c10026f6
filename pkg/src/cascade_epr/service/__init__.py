"""HTTP service wrapper around the compute layer."""

from .schemas import TableResponse  # noqa: F401
