"""Numerical laboratory for CMV matrices with dynamically defined Verblunsky coefficients."""
