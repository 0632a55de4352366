"""Unit tests for UK Economic Dashboard."""
