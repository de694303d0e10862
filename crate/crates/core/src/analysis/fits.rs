use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Domain, Point};
use crate::green::GreenField;

/// Samples per circle in [`circle_average`].
const CIRCLE_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Analysis("least squares needs at least two paired samples".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Analysis("least squares with coincident abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Mean of `G^{αα}(x, ·)` over the circle `|y − x| = r`.
pub fn circle_average(gf: &GreenField, alpha: usize, r: f64) -> Result<f64> {
    let mut acc = 0.0;
    for k in 0..CIRCLE_SAMPLES {
        let t = TAU * (k as f64 + 0.5) / CIRCLE_SAMPLES as f64;
        let y = gf.pole + Point::new(t.cos(), t.sin()) * r;
        acc += gf
            .evaluate(y)
            .map_err(|_| Error::Analysis(format!("circle of radius {r} leaves the mesh")))?
            .get(alpha, alpha);
    }
    Ok(acc / CIRCLE_SAMPLES as f64)
}

/// Fit of the circle-averaged diagonal entries against `log|x − y|`, one fit
/// per component. Radii must stay at least `2ρ` from the pole.
pub fn fit_log_singularity(gf: &GreenField, radii: &[f64]) -> Result<Vec<LinearFit>> {
    if radii.len() < 4 {
        return Err(Error::Analysis(format!("log fit needs at least 4 radii, got {}", radii.len())));
    }
    if let Some(r) = radii.iter().find(|&&r| r < 2.0 * gf.rho * (1.0 - 1e-12)) {
        return Err(Error::Analysis(format!("radius {r} inside the averaging zone 2ρ = {}", 2.0 * gf.rho)));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    (0..gf.m())
        .map(|a| {
            let ys = radii.iter().map(|&r| circle_average(gf, a, r)).collect::<Result<Vec<_>>>()?;
            least_squares(&xs, &ys)
        })
        .collect()
}

/// Log–log slope of `(distance, |value|)` samples; non-positive entries are
/// dropped first.
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<LinearFit> {
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(d, v)| *d > 0.0 && v.abs() > 0.0 && d.is_finite() && v.is_finite())
        .map(|&(d, v)| (d.ln(), v.abs().ln()))
        .collect();
    if kept.len() < 4 {
        return Err(Error::Analysis(format!(
            "decay fit needs at least 4 positive samples, got {}",
            kept.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    least_squares(&xs, &ys)
}

/// `(dist(y, D), |G^{αα}(x, y)|)` at `y = start + s·dir` for each `s`.
pub fn boundary_decay_samples(
    gf: &GreenField,
    dom: &Domain,
    alpha: usize,
    start: Point,
    dir: Point,
    steps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let dir = dir * (1.0 / dir.norm());
    steps
        .iter()
        .map(|&s| {
            let y = start + dir * s;
            let v = gf.evaluate(y)?.get(alpha, alpha);
            Ok((dom.distance_to_tag(y, BoundaryTag::Dirichlet), v.abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_square_root_law() {
        let s: Vec<(f64, f64)> = (1..=6).map(|k| (0.01 * k as f64, (0.01 * k as f64).sqrt())).collect();
        let fit = fit_decay_exponent(&s).unwrap();
        assert_relative_eq!(fit.slope, 0.5, epsilon = 1e-10);
        assert_relative_eq!(fit.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn decay_fit_needs_four_positive_samples() {
        let s = [(0.1, 1.0), (0.2, 0.0), (0.0, 1.0), (0.3, 2.0), (0.4, 3.0)];
        assert!(fit_decay_exponent(&s).is_err());
    }

    #[test]
    fn harmonic_function_is_lipschitz_near_an_interior_point() {
        // u = e^{y1} cos y2 − e^{0.3} cos 0.2 near (0.3, 0.2), along a generic direction
        let x0 = Point::new(0.3, 0.2);
        let dir = Point::new(0.6, 0.8);
        let u = |p: Point| p.x.exp() * p.y.cos() - x0.x.exp() * x0.y.cos();
        let s: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let d = 1e-3 * 2f64.powi(k);
                (d, u(x0 + dir * d))
            })
            .collect();
        assert!((fit_decay_exponent(&s).unwrap().slope - 1.0).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn power_laws_are_recovered(gamma in 0.05f64..3.0, c in 0.1f64..10.0) {
            let s: Vec<(f64, f64)> = (0..8).map(|k| {
                let d = 1e-3 * 1.7f64.powi(k);
                (d, c * d.powf(gamma))
            }).collect();
            let fit = fit_decay_exponent(&s).unwrap();
            prop_assert!((fit.slope - gamma).abs() < 1e-10);
        }

        #[test]
        fn least_squares_recovers_lines(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let xs: Vec<f64> = (0..5).map(|k| k as f64 * 0.3 - 0.4).collect();
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let fit = least_squares(&xs, &ys).unwrap();
            prop_assert!((fit.slope - a).abs() < 1e-10 && (fit.intercept - b).abs() < 1e-10);
        }
    }
}
