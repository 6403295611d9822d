"""Bundled example models (.bt files)."""
