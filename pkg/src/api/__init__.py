"""API surface for headless integrations."""
