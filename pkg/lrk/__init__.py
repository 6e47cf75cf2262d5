# lrk/__init__.py
"""Низкоранговые крыловские решатели для некорректных линейных систем."""

__version__ = '0.1.0'
