"""Shared settings for the spectral CLI and MCP server."""
from . import config

__all__ = ['config']
