"""Vanishing point detection as classification over an n x n grid."""
