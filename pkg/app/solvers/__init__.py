# Solvers package marker
