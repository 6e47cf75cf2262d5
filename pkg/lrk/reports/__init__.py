# lrk/reports/__init__.py

from lrk.reports.artifacts import FLOAT_FORMAT, ArtifactWriter

__all__ = ['FLOAT_FORMAT', 'ArtifactWriter']
