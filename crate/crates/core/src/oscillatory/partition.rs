use crate::error::{Error, Result};

fn f(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
fn smooth_step(x: f64) -> f64 {
    let a = f(x);
    let b = f(1.0 - x);
    a / (a + b)
}

/// The profile `eta`: smooth, supported in `[-1, 1]`, with
/// `sum_j eta(t - j) = 1`.
pub fn partition_profile(t: f64) -> f64 {
    smooth_step(1.0 - t.abs())
}

/// `eta_j(t) = eta(lambda^{1/2} t - j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub lambda: f64,
    pub j: i64,
}

impl Cutoff {
    pub fn eval(&self, t: f64) -> f64 {
        partition_profile(self.lambda.sqrt() * t - self.j as f64)
    }

    /// Closed support interval.
    pub fn support(&self) -> [f64; 2] {
        let s = self.lambda.sqrt();
        [(self.j as f64 - 1.0) / s, (self.j as f64 + 1.0) / s]
    }
}

pub fn partition_cutoffs(lambda: f64, j: i64) -> Result<Cutoff> {
    if lambda.is_nan() || lambda < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "partition needs lambda >= 1, got {lambda}"
        )));
    }
    Ok(Cutoff { lambda, j })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_symmetric_and_bounded() {
        for i in 0..=100 {
            let t = -1.2 + 2.4 * i as f64 / 100.0;
            let v = partition_profile(t);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, partition_profile(-t));
        }
        assert_eq!(partition_profile(0.0), 1.0);
        assert_eq!(partition_profile(1.0), 0.0);
    }
}
