# lrk/imports/__init__.py

from lrk.imports.import_json import JsonImportError, import_json_file

__all__ = ['JsonImportError', 'import_json_file']
