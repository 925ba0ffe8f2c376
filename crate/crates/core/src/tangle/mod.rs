pub mod classify;
pub mod cover;
pub mod face;
pub mod fold;
pub mod invert;
pub mod region;
pub mod surface;

pub use classify::{classify_element, classify_mesh, concave_elements, ElementClass, ElementKind};
pub use cover::{inverters, oriented_count, oriented_count_in, root_sets, ElementCount, OrientedCount};
pub use face::{face_quadrature, face_region_quadrature, FacePoint, FaceQuadrature};
pub use fold::{fold_sample_points, fold_samples_in, FoldSample, FoldSamples};
pub use invert::{invert_trilinear, invert_with, Bilinear2, InvertOptions, Inverter, Root, Root2, RootSet};
pub use region::{concave_region_quadrature, region_quadrature_in, FaceMap, QuadPoint, RegionQuadrature, RegionStats};
pub use surface::{extract_fold_surface, fold_surface_in, FoldSurface, FoldTriangle};
