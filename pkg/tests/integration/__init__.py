"""Integration tests for UK Economic Dashboard."""
