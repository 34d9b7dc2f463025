"""Closed-form reference solutions."""
