"""
Module entry point for `python -m default_spread`.
"""

from default_spread.cli import main


if __name__ == "__main__":
    main()
