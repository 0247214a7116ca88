//! Model surfaces, geodesics, distances, exponential maps and Fermi charts.

mod distance;
mod fermi;
mod geodesic;
mod surface;

pub use distance::{gauss_lemma_residual, gauss_lemma_residual_raw, geodesic_distance};
pub use fermi::{build_fermi_chart, FermiChart, FermiDiagnostics};
pub use geodesic::{
    directions, geodesic_segment, geodesic_shoot, geodesic_shoot_with, great_circle_pole, latitude,
    sample_unit_geodesics, unit_geodesic, BaseGrid, GeodesicPath, GeodesicSample, ShootOptions, DEFAULT_TOLERANCE,
};
pub use surface::{
    Chart, ChartPoint, Surface, SurfaceDescriptor, TangentVector, Vec3, PERTURBED_MAX_LENGTH, PERTURBED_VALIDITY,
};

pub(crate) use geodesic::sweep;
pub(crate) use surface::{add, cross, dot, norm3, normalized, scale};
