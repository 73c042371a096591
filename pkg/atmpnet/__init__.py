"""atmpnet: supply-chain design for personalised medicines (waiting time, cost, coverage)."""

__version__ = "0.1.0"
