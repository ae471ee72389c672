"""Tests for IMGW-PIB Monitor integration."""
