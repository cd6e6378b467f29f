//! Corrected coarse bases: localized and global correctors, the multiscale
//! Galerkin solve, corrector decay and the element-local compressed variant.

mod basis;
mod cache;
mod compress;
mod decay;
mod galerkin;

pub use basis::{
    build_ms_space, build_ms_space_with, corrector, global_corrector, GlobalOptions, MsBasis,
};
pub use cache::{cache_key, CorrectorCache};
pub use compress::{compress_space, solve_compressed, CompressedBasis, CompressedSystem};
pub use decay::{decay_profile, least_squares_slope, DecayProfile};
pub use galerkin::{solve_ideal_msfem, solve_msfem, IdealSolution, MsSolution, MsSystem};

use crate::dg::DgFunction;
use crate::error::Result;
use crate::mesh::MeshHierarchy;
use crate::scalar::Real;

/// Number of coarse layers of a corrector patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radius {
    Layers(usize),
    /// Correctors solved on the whole domain.
    Global,
}

impl std::fmt::Display for Radius {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Radius::Layers(l) => write!(f, "{l}"),
            Radius::Global => write!(f, "inf"),
        }
    }
}

/// Base of the logarithm in the localization rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogBase {
    E,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::E => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "e" | "ln" | "natural" => Ok(LogBase::E),
            "2" | "log2" | "two" => Ok(LogBase::Two),
            other => Err(crate::error::Error::Config(format!(
                "unknown log base {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for LogBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        })
    }
}

/// `ceil(C log(1/H))`, at least one layer.
pub fn localization_radius(h_coarse: f64, c: f64, base: LogBase) -> usize {
    let l = (c * base.log(1.0 / h_coarse)).ceil();
    if l.is_finite() && l >= 1.0 {
        l as usize
    } else {
        1
    }
}

/// A corrector `phi_{T,j}`, stored on the coarse cells of its patch.
#[derive(Debug, Clone)]
pub struct Corrector<S> {
    pub element: usize,
    pub local: usize,
    pub radius: Radius,
    /// Coarse cells of the patch, ascending.
    pub members: Vec<usize>,
    /// Coefficients in the coarse-major order of the patch's fine elements.
    pub values: Vec<S>,
    /// Relative residual of the constrained solve.
    pub residual: f64,
}

impl<S: Real> Corrector<S> {
    /// Extension by zero to the fine mesh.
    pub fn to_function(&self, hier: &MeshHierarchy) -> Result<DgFunction<S>> {
        let mut out = DgFunction::zeros(hier.fine());
        scatter_add(hier, &self.members, &self.values, S::one(), &mut out.coeffs);
        Ok(out)
    }
}

/// `out += alpha * v` for a vector `v` stored coarse-major on `members`.
pub(crate) fn scatter_add<S: Real>(
    hier: &MeshHierarchy,
    members: &[usize],
    v: &[S],
    alpha: S,
    out: &mut [S],
) {
    let nc = hier.children_per_element();
    for (p, &c) in members.iter().enumerate() {
        for (k, &e) in hier.children(c).iter().enumerate() {
            let src = 4 * (p * nc + k);
            for i in 0..4 {
                out[4 * e + i] += alpha * v[src + i];
            }
        }
    }
}

/// Restriction of a fine vector to `members`, coarse-major.
pub(crate) fn gather<S: Real>(hier: &MeshHierarchy, members: &[usize], v: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(4 * hier.children_per_element() * members.len());
    for &c in members {
        for &e in hier.children(c) {
            out.extend_from_slice(&v[4 * e..4 * e + 4]);
        }
    }
    out
}
