"""Personalized POI itinerary recommendation with a masked language model
trained from scratch on trajectory sentences."""

__version__ = "0.1.0"
