use crate::error::{Error, Result};

/// Equal-width discretization of per-trial mean force.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceLevels {
    pub min: f64,
    pub max: f64,
    pub width: f64,
    pub n_levels: usize,
    /// Zero-based level of each trial.
    pub assignment: Vec<usize>,
}

pub fn force_levels(forces: &[f64], n_levels: usize) -> Result<ForceLevels> {
    if forces.is_empty() || n_levels == 0 {
        return Err(Error::Empty("force levels"));
    }
    let min = forces.iter().copied().fold(f64::INFINITY, f64::min);
    let max = forces.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::Degenerate("all trials have the same mean force".into()));
    }
    let width = (max - min) / n_levels as f64;
    let assignment = forces
        .iter()
        .map(|&f| {
            if f >= max {
                n_levels - 1
            } else {
                (((f - min) / width).floor() as usize).min(n_levels - 1)
            }
        })
        .collect();
    Ok(ForceLevels {
        min,
        max,
        width,
        n_levels,
        assignment,
    })
}

impl ForceLevels {
    pub fn center(&self, level: usize) -> f64 {
        self.min + (level as f64 + 0.5) * self.width
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_levels];
        for &l in &self.assignment {
            c[l] += 1;
        }
        c
    }

    /// `(level centers, per-level mean of values)` over populated levels.
    pub fn level_means(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut sum = vec![0.0; self.n_levels];
        let mut cnt = vec![0usize; self.n_levels];
        for (&l, &v) in self.assignment.iter().zip(values) {
            sum[l] += v;
            cnt[l] += 1;
        }
        (0..self.n_levels)
            .filter(|&l| cnt[l] > 0)
            .map(|l| (self.center(l), sum[l] / cnt[l] as f64))
            .unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries_and_width() {
        let f = [0.2, 1.0, 0.5, 0.74, 0.6];
        let lv = force_levels(&f, 10).unwrap();
        assert_eq!(lv.width, (1.0 - 0.2) / 10.0);
        assert_eq!(lv.assignment[0], 0);
        assert_eq!(lv.assignment[1], 9);
    }

    #[test]
    fn uniform_spread_fills_every_level() {
        let f: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let lv = force_levels(&f, 10).unwrap();
        assert!(lv.counts().iter().all(|&c| c > 0));
    }

    #[test]
    fn empty_levels_dropped() {
        let f = [0.0, 0.05, 1.0];
        let lv = force_levels(&f, 10).unwrap();
        let (centers, means) = lv.level_means(&[1.0, 3.0, 5.0]);
        assert_eq!(centers.len(), 2);
        assert_eq!(means, vec![2.0, 5.0]);
    }

    #[test]
    fn constant_force_is_error() {
        assert!(force_levels(&[0.5, 0.5], 10).is_err());
    }
}
