"""Simulation and numerical-verification toolkit for positive self-similar
Markov processes (pssMp).

The package builds pssMp paths from Lévy processes through the Lamperti
time change, samples first/last passage times both directly and through
their exponential-functional dualities, classifies envelope integral
tests numerically, and estimates law-of-the-iterated-logarithm statistics
at desk scale.  Squared Bessel processes get exact transition-based
machinery of their own.

Modules
-------
levy        Lévy model catalog: exact increment samplers, Laplace
            exponents, scale functions.
lamperti    Lamperti transform (both directions), construction from 0,
            entrance-law estimator.
conditioned Lévy process conditioned to stay positive and the dual
            decreasing process, via rejection from a small start.
passage     First/last passage extraction and duality-based samplers.
bessel      Exact squared-Bessel transitions, Bessel-function Laplace
            transforms, Gruet-Shi band, specialized integral tests.
envelope    Tail functions, test (envelope) functions, and the
            converges/diverges/inconclusive integral classifier.
lil         Gauge families, closed-form LIL constants, and empirical
            limsup/liminf statistics.
stats       Kolmogorov-Smirnov two-sample test and ECDF summaries.
runner/cli  Config-driven experiment runner and command line front end.
"""

__version__ = "0.1.0"

from . import bessel, conditioned, envelope, lamperti, levy, lil, passage, stats

__all__ = [
    "bessel",
    "conditioned",
    "envelope",
    "lamperti",
    "levy",
    "lil",
    "passage",
    "stats",
    "__version__",
]
