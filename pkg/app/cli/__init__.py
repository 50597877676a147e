"""
Command-line interface (`python -m app.cli`).
"""
