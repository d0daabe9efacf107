"""MCP tools for Sturm-Liouville spectral computations."""

from pathlib import Path
from typing import Any, Dict, List, Optional

from sl_spectral.core.problem_file import ProblemSpec, load_problem_file
from sl_spectral.core.utils import to_jsonable
from sl_spectral.services import reports


class SpectralTools:
    """Collection of MCP tools wrapping the spectral workflows."""

    def _load(self, path: str) -> ProblemSpec:
        problem_path = Path(path).resolve()
        if not problem_path.exists():
            raise FileNotFoundError(f"The problem file was not found at path: {path}")
        return load_problem_file(problem_path)

    @staticmethod
    def _window(window: Optional[List[float]]):
        if window is None:
            return None
        if len(window) != 2 or not window[0] < window[1]:
            raise ValueError(f"window must be [lo, hi] with lo < hi, got {window}")
        return float(window[0]), float(window[1])

    def validate_problem(self, path: str) -> Dict[str, Any]:
        """
        Validates coefficients and the boundary pair of a problem file.

        Args:
            path: The file path to the problem file (.json, .yaml or .yml).

        Returns:
            The validation report, including the case classification and eta relation.
        """
        return to_jsonable(reports.validate(self._load(path)).payload)

    async def compute_spectrum(self, path: str, window: Optional[List[float]] = None, use_cache: bool = True) -> Dict[str, Any]:
        """
        Computes eigenvalues and residue weights in a window.

        Args:
            path: The file path to the problem file.
            window: [lo, hi]; defaults to the window in the file.
            use_cache: Whether to read and write the spectrum cache.

        Returns:
            {"window": [lo, hi], "eigenvalues": [{"t": ..., "xi": ...}, ...]}
        """
        result = await reports.spectrum_command(self._load(path), self._window(window), use_cache)
        return to_jsonable(result.payload)

    async def expand_function(self, path: str, K: List[int]) -> Dict[str, Any]:
        """
        Expands the file's target function in eigenfunctions.

        Args:
            path: The file path to the problem file; it must have a target section.
            K: Partial-sum sizes to report.

        Returns:
            Coefficients, L2 residuals and Parseval defects.
        """
        result = await reports.expand_command(self._load(path), K)
        return to_jsonable(result.payload)

    async def compare_with_oracle(self, path: str, grid: int = 4096, window: Optional[List[float]] = None) -> Dict[str, Any]:
        """
        Compares the spectrum with the finite-element pencil oracle.

        Args:
            path: The file path to the problem file; the right pair must be affine in lambda.
            grid: Number of cells.
            window: [lo, hi]; defaults to the window in the file.

        Returns:
            Matched eigenvalue table with gaps and a pass flag.
        """
        result = await reports.oracle_command(self._load(path), grid, self._window(window))
        return to_jsonable(result.payload)
