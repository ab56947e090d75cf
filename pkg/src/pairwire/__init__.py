"""Spectra and condensation of contact-interacting electron pairs on the half-line."""
