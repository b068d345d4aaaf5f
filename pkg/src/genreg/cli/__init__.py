"""genreg CLI entry points."""
