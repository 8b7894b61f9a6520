"""Tests for fairlip."""
