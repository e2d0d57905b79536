"""Statistical arbitrage over a state-space conditional factor model.

Core pipeline: panel construction -> online factor-premium filtering ->
mean-reversion signals on filtered-return deviations -> cost-aware,
beta-hedged portfolio accounting -> performance analytics.
"""

__version__ = "0.1.0"
