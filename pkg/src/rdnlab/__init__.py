"""Reduced deep networks for convection-dominated parametric problems.

Submodules:

* :mod:`rdnlab.netcore` -- networks, activations, two-layer PL solutions;
* :mod:`rdnlab.reduction` -- SVD, POD and deep reduction of network families;
* :mod:`rdnlab.invnet` -- bisection inverse networks and MATS compositions;
* :mod:`rdnlab.hyperbolic` -- colour-equation and Burgers reference solutions;
* :mod:`rdnlab.chebfit` -- Chebyshev interpolation of transport maps;
* :mod:`rdnlab.nwidth` -- N-width upper and lower bound surrogates;
* :mod:`rdnlab.experiments` -- concrete manifolds and MATS networks;
* :mod:`rdnlab.cli` -- the ``rdnlab`` batch driver.
"""

from .chebfit import ChebyshevSeries, cheb_fit, estimate_rho
from .hyperbolic import BurgersProblem, ColorProblem, snapshot_grid
from .invnet import BisectionInverseNetwork, MATSComposition, build_inverse, check_monotone
from .netcore import (ActivationKind, AffineLayer, DeepNetwork, FullTwoLayerSolution,
                      build_full_two_layer, eval_network, grid_norm)
from .nwidth import build_ball, fit_decay, gram_schmidt, lower_bound_certificate
from .reduction import SnapshotMatrix, deep_reduce, eval_rdn, pod_errors, pod_project, svd

__all__ = [
    "ActivationKind", "AffineLayer", "BisectionInverseNetwork", "BurgersProblem",
    "ChebyshevSeries", "ColorProblem", "DeepNetwork", "FullTwoLayerSolution", "MATSComposition",
    "SnapshotMatrix", "build_ball", "build_full_two_layer", "build_inverse", "cheb_fit",
    "check_monotone", "deep_reduce", "estimate_rho", "eval_network", "eval_rdn", "fit_decay",
    "gram_schmidt", "grid_norm", "lower_bound_certificate", "pod_errors", "pod_project",
    "snapshot_grid", "svd",
]

__version__ = "0.1.0"
