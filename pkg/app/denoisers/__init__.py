# Denoisers package marker
