"""rejectgate test suite: unit, integration and load tests."""
