# Disambiguators Module
