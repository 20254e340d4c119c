use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Orthorhombic simulation box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimBox {
    pub lengths: Vec3,
    pub periodic: [bool; 3],
}

impl SimBox {
    pub fn new(lengths: Vec3, periodic: [bool; 3]) -> Result<Self> {
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "lengths must be positive and finite, got {:?}",
                lengths.as_slice()
            )));
        }
        Ok(SimBox { lengths, periodic })
    }

    /// Fully periodic cube.
    pub fn cubic(length: f64) -> Result<Self> {
        Self::new(Vec3::repeat(length), [true; 3])
    }

    pub fn periodic(lengths: Vec3) -> Result<Self> {
        Self::new(lengths, [true; 3])
    }

    /// Box with no periodic axes; lengths are only used for bookkeeping.
    pub fn open(lengths: Vec3) -> Result<Self> {
        Self::new(lengths, [false; 3])
    }

    pub fn volume(&self) -> f64 {
        self.lengths.x * self.lengths.y * self.lengths.z
    }

    pub fn min_periodic_length(&self) -> Option<f64> {
        (0..3)
            .filter(|&d| self.periodic[d])
            .map(|d| self.lengths[d])
            .reduce(f64::min)
    }

    /// Shortest periodic image of a displacement.
    ///
    /// Ties at exactly half a box length are kept as they are, which makes the
    /// map idempotent.
    #[inline]
    pub fn minimum_image(&self, dr: Vec3) -> Vec3 {
        let mut out = dr;
        for d in 0..3 {
            if self.periodic[d] {
                let l = self.lengths[d];
                out[d] = dr[d] - l * (dr[d] / l).round_ties_even();
            }
        }
        out
    }

    /// Wrap a position into `[0, L)` on periodic axes.
    #[inline]
    pub fn wrap(&self, r: Vec3) -> Vec3 {
        let mut out = r;
        for d in 0..3 {
            if self.periodic[d] {
                let l = self.lengths[d];
                let mut x = r[d] - l * (r[d] / l).floor();
                // floor can leave x == l after rounding
                if x >= l {
                    x -= l;
                }
                if x < 0.0 {
                    x = 0.0;
                }
                out[d] = x;
            }
        }
        out
    }

    /// Minimum-image displacement from `a` to `b`.
    #[inline]
    pub fn delta(&self, a: &Vec3, b: &Vec3) -> Vec3 {
        self.minimum_image(b - a)
    }

    /// Box scaled isotropically by `mu`.
    pub fn scaled(&self, mu: f64) -> SimBox {
        SimBox {
            lengths: self.lengths * mu,
            periodic: self.periodic,
        }
    }
}

/// Free-function form of [`SimBox::minimum_image`].
pub fn minimum_image(dr: Vec3, simbox: &SimBox) -> Vec3 {
    simbox.minimum_image(dr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_box() -> SimBox {
        SimBox::cubic(1.0).unwrap()
    }

    /// Enumerate the 27 neighbouring images and keep the shortest.
    fn brute_force_image(dr: Vec3, l: Vec3) -> Vec3 {
        let mut best = dr;
        for sx in -1..=1 {
            for sy in -1..=1 {
                for sz in -1..=1 {
                    let c = dr + Vec3::new(sx as f64 * l.x, sy as f64 * l.y, sz as f64 * l.z);
                    if c.norm() < best.norm() {
                        best = c;
                    }
                }
            }
        }
        best
    }

    #[test]
    fn wraps_by_one_length() {
        let v = unit_box().minimum_image(Vec3::new(0.9, 0.0, 0.0));
        assert_abs_diff_eq!(v, Vec3::new(-0.1, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn already_minimal_is_untouched() {
        let v = unit_box().minimum_image(Vec3::new(0.3, 0.3, 0.3));
        assert_eq!(v, Vec3::new(0.3, 0.3, 0.3));
    }

    #[test]
    fn matches_image_enumeration() {
        let dr = Vec3::new(-0.7, 0.55, 0.0);
        let oracle = brute_force_image(dr, Vec3::repeat(1.0));
        let v = unit_box().minimum_image(dr);
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(v, Vec3::new(0.3, -0.45, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn non_periodic_axis_unchanged() {
        let b = SimBox::new(Vec3::repeat(1.0), [true, false, true]).unwrap();
        let v = b.minimum_image(Vec3::new(0.9, 0.9, 0.9));
        assert_abs_diff_eq!(v, Vec3::new(-0.1, 0.9, -0.1), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(SimBox::cubic(0.0).is_err());
        assert!(SimBox::cubic(-1.0).is_err());
        assert!(SimBox::cubic(f64::NAN).is_err());
    }

    #[test]
    fn wrap_lands_in_box() {
        let b = SimBox::periodic(Vec3::new(1.0, 2.0, 3.0)).unwrap();
        let w = b.wrap(Vec3::new(-0.25, 4.5, -1e-17));
        assert!((0..3).all(|d| w[d] >= 0.0 && w[d] < b.lengths[d]));
        assert_abs_diff_eq!(w.x, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y, 0.5, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn idempotent(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64,
                      lx in 0.5..3.0f64, ly in 0.5..3.0f64, lz in 0.5..3.0f64) {
            let b = SimBox::periodic(Vec3::new(lx, ly, lz)).unwrap();
            let once = b.minimum_image(Vec3::new(x, y, z));
            prop_assert_eq!(b.minimum_image(once), once);
            for d in 0..3 {
                prop_assert!(once[d].abs() <= b.lengths[d] / 2.0);
            }
        }

        #[test]
        fn lattice_shift_invariant(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64,
                                   sx in -4i32..4, sy in -4i32..4, sz in -4i32..4) {
            let l = Vec3::new(1.3, 1.7, 2.1);
            let b = SimBox::periodic(l).unwrap();
            let dr = Vec3::new(x, y, z);
            let shifted = dr + Vec3::new(sx as f64 * l.x, sy as f64 * l.y, sz as f64 * l.z);
            let a = b.minimum_image(dr);
            let c = b.minimum_image(shifted);
            // Away from the half-box tie the two images coincide up to rounding.
            prop_assume!((0..3).all(|d| (a[d].abs() - l[d] / 2.0).abs() > 1e-9));
            prop_assert!((a - c).norm() < 1e-12);
        }
    }
}
