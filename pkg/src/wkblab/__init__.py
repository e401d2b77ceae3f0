"""wkblab: numerical laboratory for a cubic turning-point ODE family.

Subpackages cover the cubic potential and its perturbed symbol, single-valued
square-root branch tracking, Liouville-Green modes in log-scaled arithmetic,
in-repo Airy evaluation with a uniform turning-point representation, a direct
high-accuracy ODE oracle, exact separated null solutions with Gevrey cutoffs,
FFT-based Gevrey-Sobolev norms, and the end-to-end slope certificate.
"""

__version__ = "0.1.0"
