"""Command-line front end of the shell eigenvalue lab."""
