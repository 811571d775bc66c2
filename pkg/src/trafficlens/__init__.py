"""Traffic forecasting workbench: data, model, attention analytics, enforcement, serving."""

__version__ = "0.1.0"
