# Corpus Ingest Module
