"""Infrastructure layer for instance and mapping documents."""
