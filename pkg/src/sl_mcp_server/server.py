#!/usr/bin/env python3
"""Spectral MCP Server - A Model Context Protocol server for Sturm-Liouville problems.

This server exposes the spectral toolkit (pair validation, eigenvalues with
residues, eigenfunction expansions, oracle comparison) to LLM clients.
"""

import sys
import logging
from typing import Any, Dict, List, Optional

from fastmcp import FastMCP
from .tools import SpectralTools

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Initialize FastMCP server
mcp = FastMCP(
    name="sl-spectral-server",
    instructions="""This server computes spectra and eigenfunction expansions of Sturm-Liouville problems described by problem files.

Available tools:
- validate_problem: Checks coefficients and the boundary pair and classifies the behaviour at infinity.
- compute_spectrum: Eigenvalues and residue weights in a window (cached).
- expand_function: Fourier coefficients, L2 residuals and Parseval defects of the file's target function.
- compare_with_oracle: Compares the spectrum with a finite-element matrix pencil.
"""
)

# Initialize spectral tools
spectral_tools = SpectralTools()


@mcp.tool
def validate_problem(path: str) -> Dict[str, Any]:
    """Validates the coefficients and boundary pair of a problem file.

    Args:
        path: The absolute file path to the problem file.

    Returns:
        The validation report with case classification and eta relation.
    """
    try:
        logger.info(f"Executing validate_problem for: {path}")
        return spectral_tools.validate_problem(path)
    except Exception as e:
        logger.error(f"Error in validate_problem: {e}")
        # Re-raising the exception to be sent back to the MCP client
        raise


@mcp.tool
async def compute_spectrum(path: str, window: Optional[List[float]] = None, use_cache: bool = True) -> Dict[str, Any]:
    """Computes the eigenvalues and residue weights of a problem in a window.

    Args:
        path: The absolute file path to the problem file.
        window: Optional [lo, hi]; defaults to the window in the file.
        use_cache: Whether to use the spectrum cache (default: True).

    Returns:
        The window and a list of {"t", "xi"} rows.
    """
    try:
        logger.info(f"Executing compute_spectrum for '{path}' (window {window})")
        result = await spectral_tools.compute_spectrum(path, window, use_cache)
        logger.info(f"Found {len(result['eigenvalues'])} eigenvalues")
        return result
    except Exception as e:
        logger.error(f"Error in compute_spectrum: {e}")
        raise


@mcp.tool
async def expand_function(path: str, K: List[int]) -> Dict[str, Any]:
    """Expands the target function of a problem file in eigenfunctions.

    Args:
        path: The absolute file path to the problem file.
        K: Partial-sum sizes to report, e.g. [1, 10, 100].

    Returns:
        Coefficients, residuals in the weighted norm and Parseval defects.
    """
    try:
        logger.info(f"Executing expand_function for '{path}' (K={K})")
        return await spectral_tools.expand_function(path, K)
    except Exception as e:
        logger.error(f"Error in expand_function: {e}")
        raise


@mcp.tool
async def compare_with_oracle(path: str, grid: int = 4096, window: Optional[List[float]] = None) -> Dict[str, Any]:
    """Compares the computed spectrum with a finite-element pencil oracle.

    Args:
        path: The absolute file path to the problem file.
        grid: Number of cells of the pencil (default: 4096).
        window: Optional [lo, hi]; defaults to the window in the file.

    Returns:
        Matched eigenvalue table with absolute gaps and a pass flag.
    """
    try:
        logger.info(f"Executing compare_with_oracle for '{path}' (grid {grid})")
        result = await spectral_tools.compare_with_oracle(path, grid, window)
        logger.info(f"Oracle comparison passed={result['passed']}, max gap {result['max_gap']}")
        return result
    except Exception as e:
        logger.error(f"Error in compare_with_oracle: {e}")
        raise


def main():
    """Main entry point for the spectral MCP server."""
    try:
        logger.info("Starting Spectral MCP Server...")
        mcp.run()
    except KeyboardInterrupt:
        logger.info("Server shutdown requested.")
        sys.exit(0)
    except Exception as e:
        logger.error(f"A critical error occurred: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
