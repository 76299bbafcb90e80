"""Thermodynamic-integration estimators for marginal likelihoods and Bayes factors."""
