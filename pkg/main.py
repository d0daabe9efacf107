#!/usr/bin/env python3
"""Sturm-Liouville spectral toolkit - Multiple Entry Points

Available commands after installation:
    sl-spectral      - Command-line interface (validate, spectrum, expand, converge, oracle-compare)
    sl-mcp-server    - Start MCP server (for Claude Desktop and other MCP clients)

Development commands:
    uv run app.py validate problems/worked_example.json
    uv run sl-spectral spectrum problems/worked_example.json --window=-1:500
    uv run sl-mcp-server
    uv run create_example_problems.py   - Rewrite the bundled problem files
"""


def main():
    print(__doc__)


if __name__ == "__main__":
    main()
