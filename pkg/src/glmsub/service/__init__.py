"""HTTP service wrapping the estimators; see app.py for the endpoints."""
