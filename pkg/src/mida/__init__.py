"""Maximum independence domain adaptation."""
