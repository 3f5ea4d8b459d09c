# Audit package marker
