# Metrics Module
