"""Desk-scale deterministic policy-gradient harness (point mass + TD3-lite)."""
