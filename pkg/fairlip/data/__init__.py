"""Domain types and the probability-metric kernel."""
