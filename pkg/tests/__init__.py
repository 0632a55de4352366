"""Test suite for UK Economic Dashboard."""
