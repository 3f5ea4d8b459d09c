# Core package marker
