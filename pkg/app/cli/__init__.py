# CLI package marker
