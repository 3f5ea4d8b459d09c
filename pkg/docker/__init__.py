# Docker package marker
