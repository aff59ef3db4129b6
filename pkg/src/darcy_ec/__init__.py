"""Pseudospectral solver and analysis toolkit for Darcy-type electroconvection."""

__version__ = "0.1.0"
