use core::ops::{Add, AddAssign, Sub};

use super::HyperParams;

/// Summed gradient, summed hessian and row count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradStats {
    pub g: f64,
    pub h: f64,
    pub n: u32,
}

impl GradStats {
    pub fn new(g: f64, h: f64, n: u32) -> Self {
        Self { g, h, n }
    }
}

impl Add for GradStats {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.g + o.g, self.h + o.h, self.n + o.n)
    }
}

impl AddAssign for GradStats {
    fn add_assign(&mut self, o: Self) {
        self.g += o.g;
        self.h += o.h;
        self.n += o.n;
    }
}

impl Sub for GradStats {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        Self::new(self.g - o.g, self.h - o.h, self.n - o.n)
    }
}

/// `sign(g) * max(|g| - l1, 0)`.
pub fn soft_threshold(g: f64, l1: f64) -> f64 {
    if g > l1 {
        g - l1
    } else if g < -l1 {
        g + l1
    } else {
        0.0
    }
}

fn score(s: GradStats, p: &HyperParams) -> f64 {
    let denom = s.h + p.lambda_l2;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = soft_threshold(s.g, p.lambda_l1);
    t * t / denom
}

/// `score(left) + score(right) - score(parent)` with the right child taken
/// as `parent - left`.
pub fn split_gain(parent: GradStats, left: GradStats, p: &HyperParams) -> f64 {
    score(left, p) + score(parent - left, p) - score(parent, p)
}

/// Newton leaf value before shrinkage.
pub fn leaf_weight(s: GradStats, p: &HyperParams) -> f64 {
    let denom = s.h + p.lambda_l2;
    if denom <= 0.0 {
        return 0.0;
    }
    -soft_threshold(s.g, p.lambda_l1) / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain() -> HyperParams {
        HyperParams { lambda_l1: 0.0, lambda_l2: 0.0, ..Default::default() }
    }

    #[test]
    fn hand_algebra_example() {
        let gain = split_gain(GradStats::new(0.0, 2.0, 2), GradStats::new(-1.0, 1.0, 1), &plain());
        assert_eq!(gain, 2.0);
    }

    #[test]
    fn identical_children_gain_nothing() {
        let parent = GradStats::new(3.0, 4.0, 10);
        let half = GradStats::new(1.5, 2.0, 5);
        assert!(split_gain(parent, half, &plain()).abs() < 1e-12);
    }

    #[test]
    fn empty_right_child_is_zero_gain() {
        let parent = GradStats::new(3.0, 4.0, 10);
        assert_eq!(split_gain(parent, parent, &plain()), 0.0);
    }

    #[test]
    fn l1_shrinks_toward_zero() {
        let p = HyperParams { lambda_l1: 2.0, lambda_l2: 1.0, ..Default::default() };
        assert_eq!(leaf_weight(GradStats::new(1.5, 1.0, 1), &p), 0.0);
        assert_eq!(leaf_weight(GradStats::new(-5.0, 2.0, 1), &p), 1.0);
    }
}
