//! Earth mover's distance between sampled skeletons and template retrieval.

mod library;
pub mod transport;

pub use library::{
    build_library, match_templates, ShapeCategory, ShapeMatch, Template, TemplateDistance,
    TemplateLibrary,
};
pub use transport::{solve_transport, TransportPlan, MASS_TOLERANCE};

use crate::error::Result;
use crate::skeleton::{SamplePoint, SampledSkeleton};

fn euclid(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Row-major Euclidean ground distances between two point sets.
pub fn ground_distances(a: &[SamplePoint], b: &[SamplePoint]) -> Vec<f64> {
    let mut d = Vec::with_capacity(a.len() * b.len());
    for p in a {
        for q in b {
            d.push(euclid(p.pos, q.pos));
        }
    }
    d
}

/// Optimal transport plan between two weighted point sets.
pub fn emd_plan(a: &[SamplePoint], b: &[SamplePoint]) -> Result<(TransportPlan, Vec<f64>)> {
    let wa: Vec<f64> = a.iter().map(|p| p.w).collect();
    let wb: Vec<f64> = b.iter().map(|p| p.w).collect();
    let cost = ground_distances(a, b);
    let plan = solve_transport(&wa, &wb, &cost)?;
    Ok((plan, cost))
}

pub fn emd_points(a: &[SamplePoint], b: &[SamplePoint]) -> Result<f64> {
    Ok(emd_plan(a, b)?.0.cost())
}

/// Exact EMD with Euclidean ground distance between normalized positions.
pub fn emd(a: &SampledSkeleton, b: &SampledSkeleton) -> Result<f64> {
    emd_points(&a.points, &b.points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[([f64; 3], f64)]) -> Vec<SamplePoint> {
        v.iter()
            .map(|&(pos, w)| SamplePoint { pos, r: 0.0, w })
            .collect()
    }

    #[test]
    fn identity_is_zero() {
        let a = pts(&[([0.0; 3], 0.3), ([1.0, 2.0, 0.0], 0.7)]);
        assert_eq!(emd_points(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn forced_transport() {
        let a = pts(&[([0.0; 3], 1.0)]);
        let b = pts(&[([0.0, 2.0, 0.0], 1.0)]);
        assert_eq!(emd_points(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn split_mass_example() {
        let a = pts(&[([0.0; 3], 0.5), ([1.0, 0.0, 0.0], 0.5)]);
        let b = pts(&[
            ([0.0; 3], 0.25),
            ([1.0, 0.0, 0.0], 0.25),
            ([0.5, 0.0, 0.0], 0.5),
        ]);
        assert!((emd_points(&a, &b).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unequal_mass_is_an_error() {
        let a = pts(&[([0.0; 3], 1.0)]);
        let b = pts(&[([0.0; 3], 0.5)]);
        assert!(emd_points(&a, &b).is_err());
    }
}
