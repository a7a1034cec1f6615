"""Numerical conformal geometry: tractor calculus for embedded submanifolds,
conformal circles and first integrals, at desk scale."""

from .tensors import (ArrayField, DiffBackend, FieldHandle, Index,
                      TensorValue, alt, contract, jet, outer, sym, trace)
from .riemann import CurvaturePack, GeometrySpec, curvature_pack, rescale
from .tractor import (TractorFormObject, TractorObject, hodge_star,
                      parallel_transport, scale_tractor, thomas_D,
                      tractor_connection_apply, tractor_curvature,
                      tractor_metric, tractor_volume_form)
from .submanifold import (EmbeddingSpec, SubmanifoldPack,
                          conformal_transform_check,
                          gauss_codazzi_ricci_residuals, submanifold_pack)
from .subtractor import (ClassificationReport, SubTractorContext, classify,
                         difference_tractor, fialkow, mean_curvature_tractor,
                         mu_invariant, normal_tractor_projector,
                         tractor_normal_form,
                         tractor_second_fundamental_form)
from .circles import (CircleTrajectory, CurveState, conformal_circle_rhs,
                      curve_tractors, integrate_circle)
from .firstint import (SplitTractor, bgg_split, conserved_quantity,
                       ky_residual, zero_locus_scan)
from . import geolib

__version__ = "0.1.0"
