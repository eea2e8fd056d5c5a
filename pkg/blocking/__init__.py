# Blocking Module
