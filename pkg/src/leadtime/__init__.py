"""Availability-date prediction toolkit.

Generates or ingests product-order records, derives the days-to-availability
target, trains seven regression model families on mixed categorical and
numerical features, tunes them with cross-validated random grid search,
evaluates with RMSE/R2/MAE and plot artifacts, and applies the hybrid
short/medium/long-range planning-date protocol with lane load profiles.
"""

__version__ = "0.1.0"
