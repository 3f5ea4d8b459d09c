# Oracle package marker
