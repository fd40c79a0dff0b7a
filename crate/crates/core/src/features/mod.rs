//! Feature-matrix construction, ablation-based selection and permutation
//! importance.

mod importance;
mod matrix;
mod selection;
mod spec;

pub use importance::{permutation_importance, FeatureImportance, Predictor};
pub use matrix::{Column, FeatureMatrix};
pub use selection::{ablate_features, AblationCell, AblationModel, AblationProtocol, FeatureAblationReport};
pub use spec::{
    build_matrix, build_matrix_with, standardize_weather, Encoding, FeatureDescriptor, FeatureKind,
    FeatureSpec, MatrixOptions, ModelFamily, SocioField, Task,
};
