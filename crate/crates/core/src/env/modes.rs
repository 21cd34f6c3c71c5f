//! Grid-search oracles for the modes of analytic densities.

use crate::error::{ModalError, Result};

use super::arm::ArmDistribution;

/// Spacing of the one-dimensional search grid, and of the local 2-D grid.
pub const GRID_STEP: f64 = 1e-4;
/// A local maximum flat over a wider stretch than this is rejected.
pub const PLATEAU_TOL: f64 = 1e-3;
const COARSE_2D: f64 = 1e-2;

/// A local maximum of a density: location and density value.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueMode {
    pub location: Vec<f64>,
    pub density: f64,
}

/// Local maxima of the arm's uncontaminated density, highest first.
///
/// Dense grid search (step 1e-4 in one dimension; a 1e-2 grid followed by a
/// local 1e-4 grid in two) with golden-section refinement in one dimension.
/// A flat-topped maximum is an error, since no single point is a mode.
pub fn true_modes(arm: &ArmDistribution) -> Result<Vec<TrueMode>> {
    arm.validate()?;
    density_modes(|x| arm.clean_pdf(x), arm.dimension(), false)
}

/// Highest mode of the arm's full sampling density, contamination included.
pub fn contaminated_top_mode(arm: &ArmDistribution) -> Result<TrueMode> {
    arm.validate()?;
    if arm.contamination.as_ref().is_some_and(|m| m.q > 0.0 && m.dispersion == 0.0) {
        return Err(ModalError::Validation(
            "contamination without dispersion has atoms and no density maximum".into(),
        ));
    }
    let modes = density_modes(|x| arm.pdf(x), arm.dimension(), true)?;
    Ok(modes.into_iter().next().expect("nonempty"))
}

/// Local maxima of an arbitrary density on `[0, 1]^dim`, `dim ≤ 2`. With
/// `global_only`, only the highest maximum is checked for flatness and
/// returned.
pub fn density_modes(f: impl Fn(&[f64]) -> f64, dim: usize, global_only: bool) -> Result<Vec<TrueMode>> {
    let mut modes = match dim {
        1 => modes_1d(&f, global_only)?,
        2 => modes_2d(&f, global_only)?,
        _ => {
            return Err(ModalError::param(format!(
                "mode oracle supports dimensions 1 and 2, got {dim}"
            )))
        }
    };
    if modes.is_empty() {
        return Err(ModalError::Validation("density has no positive maximum".into()));
    }
    modes.sort_by(|a, b| {
        b.density
            .total_cmp(&a.density)
            .then_with(|| a.location.partial_cmp(&b.location).expect("finite"))
    });
    Ok(modes)
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn modes_1d(f: &impl Fn(&[f64]) -> f64, global_only: bool) -> Result<Vec<TrueMode>> {
    let steps = (1.0 / GRID_STEP).round() as usize;
    let xs: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(&[x])).collect();
    // Runs of equal values that are higher than both neighbors.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut s = 0;
    while s <= steps {
        let mut e = s;
        while e < steps && same(fs[e + 1], fs[s]) {
            e += 1;
        }
        let left_lower = s == 0 || fs[s - 1] < fs[s];
        let right_lower = e == steps || fs[e + 1] < fs[s];
        if fs[s] > 0.0 && left_lower && right_lower {
            runs.push((s, e));
        }
        s = e + 1;
    }
    if global_only {
        if let Some(&best) = runs.iter().max_by(|a, b| fs[a.0].total_cmp(&fs[b.0]).then(b.0.cmp(&a.0))) {
            runs = vec![best];
        }
    }
    let mut out = Vec::with_capacity(runs.len());
    for (s, e) in runs {
        let width = xs[e] - xs[s];
        if width > PLATEAU_TOL {
            return Err(ModalError::Validation(format!(
                "density is flat on [{:.4}, {:.4}]; no isolated mode",
                xs[s], xs[e]
            )));
        }
        let lo = xs[s.saturating_sub(1)];
        let hi = xs[(e + 1).min(steps)];
        let (x, v) = golden_max(|x| f(&[x]), lo, hi);
        // Keep the grid point if refinement was fooled by a discontinuity.
        let (x, v) = if v >= fs[s] { (x, v) } else { (xs[s], fs[s]) };
        out.push(TrueMode { location: vec![x], density: v });
    }
    Ok(out)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

fn modes_2d(f: &impl Fn(&[f64]) -> f64, global_only: bool) -> Result<Vec<TrueMode>> {
    let m = (1.0 / COARSE_2D).round() as usize;
    let at = |i: usize| i as f64 / m as f64;
    let grid: Vec<Vec<f64>> = (0..=m).map(|i| (0..=m).map(|j| f(&[at(i), at(j)])).collect()).collect();
    let neighbors = |i: usize, j: usize| {
        let mut v = Vec::with_capacity(8);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if (0..=m as i64).contains(&a) && (0..=m as i64).contains(&b) {
                    v.push((a as usize, b as usize));
                }
            }
        }
        v
    };
    // (row, column, flat) for every local-maximum group.
    let mut groups: Vec<(usize, usize, bool)> = Vec::new();
    let mut claimed = vec![vec![false; m + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=m {
            let v = grid[i][j];
            if v <= 0.0 || claimed[i][j] {
                continue;
            }
            if neighbors(i, j).iter().any(|&(a, b)| grid[a][b] > v && !same(grid[a][b], v)) {
                continue;
            }
            // Flood the equal-valued group; a maximum must be isolated.
            let mut group = vec![(i, j)];
            let mut k = 0;
            claimed[i][j] = true;
            let mut is_max = true;
            while k < group.len() {
                let (a, b) = group[k];
                for (c, d) in neighbors(a, b) {
                    if same(grid[c][d], v) {
                        if !claimed[c][d] {
                            claimed[c][d] = true;
                            group.push((c, d));
                        }
                    } else if grid[c][d] > v {
                        is_max = false;
                    }
                }
                k += 1;
            }
            if is_max {
                groups.push((i, j, group.len() > 2));
            }
        }
    }
    if global_only {
        groups = groups
            .into_iter()
            .max_by(|a, b| grid[a.0][a.1].total_cmp(&grid[b.0][b.1]))
            .into_iter()
            .collect();
    }
    if let Some(&(i, j, _)) = groups.iter().find(|g| g.2) {
        return Err(ModalError::Validation(format!(
            "density is flat around ({:.3}, {:.3}); no isolated mode",
            at(i),
            at(j)
        )));
    }
    let candidates: Vec<(usize, usize)> = groups.into_iter().map(|(i, j, _)| (i, j)).collect();
    let fine = (COARSE_2D / GRID_STEP).round() as i64;
    let mut out: Vec<TrueMode> = Vec::new();
    for (i, j) in candidates {
        let (ci, cj) = (at(i), at(j));
        let mut best = (vec![ci, cj], grid[i][j]);
        for a in -fine..=fine {
            for b in -fine..=fine {
                let p = [ci + a as f64 * GRID_STEP, cj + b as f64 * GRID_STEP];
                if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
                    continue;
                }
                let v = f(&p);
                if v > best.1 {
                    best = (p.to_vec(), v);
                }
            }
        }
        let dup = out.iter().any(|m| {
            m.location.iter().zip(&best.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() < COARSE_2D
        });
        if !dup {
            out.push(TrueMode {
                location: best.0,
                density: best.1,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::arm::{Base, Component, ContaminationModel};

    #[test]
    fn single_truncated_normal() {
        let modes = true_modes(&ArmDistribution::truncated_normal(0.3, 0.05)).unwrap();
        assert_eq!(modes.len(), 1);
        assert!((modes[0].location[0] - 0.3).abs() < 1e-6, "{modes:?}");
    }

    #[test]
    fn two_component_mixture() {
        let arm = ArmDistribution::mixture(vec![
            (0.7, Base::TruncatedNormal { mean: 0.3, sd: 0.05 }),
            (0.3, Base::TruncatedNormal { mean: 0.8, sd: 0.05 }),
        ]);
        let modes = true_modes(&arm).unwrap();
        assert_eq!(modes.len(), 2);
        assert!((modes[0].location[0] - 0.3).abs() < 1e-3);
        assert!((modes[1].location[0] - 0.8).abs() < 1e-3);
        let swapped = ArmDistribution::mixture(vec![
            (0.3, Base::TruncatedNormal { mean: 0.8, sd: 0.05 }),
            (0.7, Base::TruncatedNormal { mean: 0.3, sd: 0.05 }),
        ]);
        assert_eq!(true_modes(&swapped).unwrap(), modes);
    }

    #[test]
    fn uniform_is_rejected() {
        let arm = ArmDistribution::mixture(vec![(1.0, Base::Uniform { low: 0.0, high: 1.0 })]);
        assert!(matches!(true_modes(&arm), Err(ModalError::Validation(_))));
    }

    #[test]
    fn triangular_peak() {
        let arm = ArmDistribution::mixture(vec![(1.0, Base::Triangular { low: 0.1, mode: 0.37, high: 0.9 })]);
        let modes = true_modes(&arm).unwrap();
        assert!((modes[0].location[0] - 0.37).abs() < 1e-4, "{modes:?}");
    }

    #[test]
    fn contamination_below_peak_keeps_top_mode() {
        let arm = ArmDistribution::truncated_normal(0.6, 0.03).with_contamination(ContaminationModel {
            q: 0.2,
            noise_points: vec![vec![0.2]],
            dispersion: 0.02,
        });
        let top = contaminated_top_mode(&arm).unwrap();
        assert!((top.location[0] - 0.6).abs() < 1e-3);
        // A tall enough noise box takes over.
        let heavy = ArmDistribution::truncated_normal(0.6, 0.2).with_contamination(ContaminationModel {
            q: 0.5,
            noise_points: vec![vec![0.2]],
            dispersion: 0.02,
        });
        let top = contaminated_top_mode(&heavy).unwrap();
        assert!((top.location[0] - 0.22).abs() < 1e-3, "{top:?}");
    }

    #[test]
    fn two_dimensional_modes() {
        let arm = ArmDistribution::new(vec![
            Component::new(
                0.6,
                vec![Base::TruncatedNormal { mean: 0.3, sd: 0.05 }, Base::TruncatedNormal { mean: 0.4, sd: 0.05 }],
            ),
            Component::new(
                0.4,
                vec![Base::TruncatedNormal { mean: 0.7, sd: 0.05 }, Base::TruncatedNormal { mean: 0.8, sd: 0.05 }],
            ),
        ]);
        let modes = true_modes(&arm).unwrap();
        assert_eq!(modes.len(), 2, "{modes:?}");
        assert!((modes[0].location[0] - 0.3).abs() < 2e-4 && (modes[0].location[1] - 0.4).abs() < 2e-4);
        assert!((modes[1].location[0] - 0.7).abs() < 2e-3 && (modes[1].location[1] - 0.8).abs() < 2e-3);
    }
}
