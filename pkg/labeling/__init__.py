# Labeling Module
