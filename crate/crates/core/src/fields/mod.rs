//! Electromagnetic potentials as polynomial fields, the fields they
//! generate, vector-field splitting and the auxiliary potentials.

mod auxiliary;
mod poly;
mod potentials;
mod split;

pub use auxiliary::{balance_residual, build_auxiliary_potentials, AuxFrame, AuxiliaryPotentials, CubicGauge};
pub use poly::{
    eval_matrix, Mat3, MultiDegree, PolyScalarField, PolyVectorField, ScalarDoc, TermDoc, TimePoly, Vec3, VectorDoc,
    SPATIAL_DEGREE_CAP, TIME_DEGREE_CAP,
};
pub use potentials::{
    em_fields, linearize_potentials, AnalyticPotentials, EMFieldSample, PotentialSample, Potentials, PotentialsDoc,
};
pub use split::{split_field_at_point, split_polynomial_field, tangent_part_via_curl, DEFAULT_SPLIT_NODES};
