# Spectral package marker
