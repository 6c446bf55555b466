"""Two-user X-channel interference alignment lab."""
