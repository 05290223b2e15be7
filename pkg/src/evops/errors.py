"""Shared exception base so the gateway can map domain errors to HTTP codes."""


class EvopsError(Exception):
    """Base class for all domain errors raised by evops modules."""

    http_status = 400


class NotReadyError(EvopsError):
    """A required model or resource is not loaded."""

    http_status = 503
