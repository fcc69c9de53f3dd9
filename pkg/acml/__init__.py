"""Almost contact metric structures on distributions: adapted-coordinate checks."""
__version__ = '0.1.0'

from .cli import main

__all__ = ["main", "__version__"]
