//! Competitor maps on a ball built from data on its boundary sphere.
//!
//! The pieces are: filling of spherical discs through a weighted planar
//! problem ([`transplant`]), the cone extension through a cylinder and the
//! map from flat to spherical cylinders ([`cylinder`]), phase lifting and
//! the annulus and core extensions ([`phase`]), assembled by
//! [`competitor`](competitor::competitor).

pub mod competitor;
pub mod cylinder;
pub mod phase;
pub mod transplant;

pub use competitor::{
    compare_with_minimizer, competitor, fit_power_log, Competitor, CompetitorParams, CompetitorReport, DiscRecord,
    MinimizerComparison, PowerLogFit,
};
pub use cylinder::{cone_extension, cone_value, cylinder_map_distortion, ConeReport, MapDistortion, ShellChart};
pub use phase::{
    harmonic_phase_extension, lift_phase, tangential_dirichlet, AnnulusData, AnnulusPieces, HarmonicPhaseReport,
    LiftAudit,
};
pub use transplant::{
    fill_spherical_disc, pull_back, stereographic_transplant, FillOptions, FillReport, FilledDisc, TransplantChart,
};

use crate::bad_discs::BadDiscError;
use crate::energy::EnergyError;
use crate::geometry::GeometryError;
use crate::relax::RelaxError;
use crate::topology::TopologyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("boundary data has degree {degree}; no zero-degree filling exists")]
    NonzeroWinding { degree: i32 },
    #[error("modulus vanishes at node {index}")]
    VanishingModulus { index: usize },
    #[error("phase lifting failed: {0}")]
    Lifting(String),
    #[error("{step}: {source}")]
    Stage {
        step: &'static str,
        source: Box<ConstructError>,
    },
    #[error(transparent)]
    BadDiscs(#[from] BadDiscError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl ConstructError {
    pub(crate) fn at(step: &'static str) -> impl FnOnce(ConstructError) -> ConstructError {
        move |e| ConstructError::Stage {
            step,
            source: Box::new(e),
        }
    }
}
