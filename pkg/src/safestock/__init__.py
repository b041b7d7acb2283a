"""Safety-stock dimensioning with KDE and normal demand models."""

__version__ = "0.1.0"
