# Name Model Module
