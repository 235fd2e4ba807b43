"""Shared tolerance helper for Monte Carlo assertions."""

SE_FLOOR = 1e-12  # quantities that are constant by construction have SE = 0


def within(value, target, se, k=3.0):
    return abs(value - target) <= k * se + SE_FLOOR
