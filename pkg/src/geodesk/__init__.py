"""Pointwise verification of almost co-Kähler, quasi-Einstein and perfect-fluid identities."""

__version__ = "0.1.0"
