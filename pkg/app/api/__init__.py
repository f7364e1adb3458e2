"""API package containing the FastAPI application and request/response schemas."""

__all__ = ["main", "schemas"]
