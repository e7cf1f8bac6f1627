"""Numerical verification toolkit for the sharp Hausdorff-Young inequality.

Modules
-------
grids
    Sampled functions, norms, convolution and Fourier transforms on R^d,
    Z^d and the torus.
constants
    Babenko-Beckner constants, the quadratic-deficit constant, Young's
    constant and the Hausdorff-Young ratio.
gaussian_manifold
    Gaussians exp(P), projection onto the Gaussian manifold and distances.
second_variation
    The second-variation quadratic form, the operator ``T`` and its Hermite
    spectrum, pointwise expansion inequalities and the sharpness family.
additive
    Finite sets, sumsets, additive energy, multiprogressions and the
    structural searches built on them.
hybrid
    Fourier analysis on Z x R and the lifting of lattice-concentrated
    functions.
extraction
    Level-set structure pipeline and the uncertainty product probe.
cli
    Batch runner for the verification suites.
"""
__version__ = "0.1.0"
