"""Tests for genreg package."""
