"""evsim: event-camera robot simulation toolkit."""

__version__ = "0.1.0"
