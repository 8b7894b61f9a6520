"""Optimisation programs and mechanisms built on the domain types."""
