"""Prospect-theory passenger model and dynamic tariff design for shared rides."""

__version__ = "0.1.0"
