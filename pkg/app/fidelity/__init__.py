# Fidelity package marker
