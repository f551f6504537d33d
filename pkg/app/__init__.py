"""BroadcastBench package initializer.

Adding an __init__.py makes the `app` directory an importable package, so
`python -m app.cli` and `uvicorn app.main:app` resolve the same modules.
"""

__all__ = ["main", "cli"]
