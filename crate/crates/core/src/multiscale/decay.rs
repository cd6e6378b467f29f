use super::Corrector;
use crate::coefficient::Coefficient;
use crate::dg::{energy_contributions, PenaltyRule};
use crate::error::{Error, Result};
use crate::mesh::MeshHierarchy;
use crate::scalar::Real;

/// Energy of a corrector outside growing patches around its element.
#[derive(Debug, Clone)]
pub struct DecayProfile {
    pub element: usize,
    /// `(k, tail_k)` with `tail_k` the energy norm on the complement of the `k`-layer patch.
    pub tails: Vec<(usize, f64)>,
    /// Energy norm of the whole corrector.
    pub total: f64,
    pub gamma: Option<f64>,
}

impl DecayProfile {
    /// Tails usable for the fit: positive and above round-off of the total.
    pub fn usable(&self) -> Vec<(usize, f64)> {
        let floor = self.total * 1e-13;
        self.tails
            .iter()
            .copied()
            .filter(|&(_, t)| t > floor)
            .collect()
    }

    /// `exp` of the least-squares slope of `ln tail_k` over `k`.
    pub fn fit_gamma(&self) -> Result<f64> {
        let pts = self.usable();
        if pts.len() < 3 {
            return Err(Error::Numerical(format!(
                "decay fit needs at least 3 usable layers, got {}",
                pts.len()
            )));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        Ok(least_squares_slope(&xs, &ys).exp())
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Tails for `k = 1..=k_max`. A fine face counts towards the complement of a
/// patch when one of its elements lies outside it.
pub fn decay_profile<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    phi: &Corrector<S>,
    k_max: usize,
) -> Result<DecayProfile> {
    let fine = hier.fine();
    let v = phi.to_function(hier)?;
    let contrib = energy_contributions(fine, coef, pen, &v)?;
    let layers = hier.coarse_layers(phi.element);
    let key = |e: usize| layers[hier.parent(e).0] as usize;
    let top = layers.iter().copied().max().unwrap_or(1) as usize;
    let mut by_layer = vec![0.0f64; top + 2];
    for (e, c) in contrib.element.iter().enumerate() {
        by_layer[key(e)] += c.to_f64_lossy();
    }
    for (f, c) in contrib.face.iter().enumerate() {
        let face = fine.face(f);
        let k = match face.plus_element() {
            Some(p) => key(face.minus).max(key(p)),
            None => key(face.minus),
        };
        by_layer[k] += c.to_f64_lossy();
    }
    let mut outside = vec![0.0f64; top + 2];
    for k in (0..=top).rev() {
        outside[k] = outside[k + 1] + by_layer[k + 1];
    }
    let tails = (1..=k_max)
        .map(|k| (k, outside[k.min(top)].max(0.0).sqrt()))
        .collect();
    let total = (outside[0] + by_layer[0]).max(0.0).sqrt();
    let mut profile = DecayProfile {
        element: phi.element,
        tails,
        total,
        gamma: None,
    };
    profile.gamma = profile.fit_gamma().ok();
    Ok(profile)
}
