use serde::{Deserialize, Serialize};

use crate::pbc::{SimBox, Vec3};

/// Fraction of the cutoff below which the switch is exactly one.
pub const SWITCH_ONSET: f64 = 0.9;

/// Smooth cutoff: 1 below 0.9·rc, cosine taper to 0 at rc. Returns (s, ds/dr).
pub fn switch(r: f64, rc: f64) -> (f64, f64) {
    let r_on = SWITCH_ONSET * rc;
    if r <= r_on {
        (1.0, 0.0)
    } else if r < rc {
        let w = rc - r_on;
        let x = std::f64::consts::PI * (r - r_on) / w;
        (0.5 * (x.cos() + 1.0), -0.5 * x.sin() * std::f64::consts::PI / w)
    } else {
        (0.0, 0.0)
    }
}

/// Gaussian radial basis g_k(r) = exp(−((r − μ_k)/δ)²) with centres evenly
/// spread over [0, rc].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialBasis {
    pub rc: f64,
    pub centers: Vec<f64>,
    pub width: f64,
}

impl RadialBasis {
    pub fn new(rc: f64, count: usize) -> Self {
        let step = if count > 1 { rc / (count - 1) as f64 } else { rc };
        RadialBasis { rc, centers: (0..count).map(|k| k as f64 * step).collect(), width: step }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Fill basis values and their radial derivatives.
    pub fn eval(&self, r: f64, g: &mut [f64], dg: &mut [f64]) {
        let inv_w2 = 1.0 / (self.width * self.width);
        for ((mu, gk), dgk) in self.centers.iter().zip(g.iter_mut()).zip(dg.iter_mut()) {
            let d = r - mu;
            *gk = (-d * d * inv_w2).exp();
            *dgk = -2.0 * d * inv_w2 * *gk;
        }
    }
}

/// Per-atom radial features: for each neighbour type t the block
/// Σ_{j of type t} g_k(r_ij)·s(r_ij), k = 1..K. `pairs` is a full list.
pub fn descriptor(
    positions: &[Vec3],
    types: &[usize],
    n_types: usize,
    simbox: &SimBox,
    pairs: &[(usize, usize)],
    basis: &RadialBasis,
) -> Vec<Vec<f64>> {
    let k = basis.len();
    let mut out = vec![vec![0.0; n_types * k]; positions.len()];
    let mut g = vec![0.0; k];
    let mut dg = vec![0.0; k];
    for &(i, j) in pairs {
        let r = simbox.delta(&positions[i], &positions[j]).norm();
        if r >= basis.rc {
            continue;
        }
        let (s, _) = switch(r, basis.rc);
        basis.eval(r, &mut g, &mut dg);
        let block = &mut out[i][types[j] * k..(types[j] + 1) * k];
        for (d, gk) in block.iter_mut().zip(&g) {
            *d += gk * s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbors::{find_pairs, ListMode};

    #[test]
    fn switch_is_continuous_and_smooth() {
        let rc = 0.6;
        assert_eq!(switch(0.5, rc), (1.0, 0.0));
        assert_eq!(switch(rc, rc), (0.0, 0.0));
        let (s, _) = switch(rc - 1e-9, rc);
        assert!(s < 1e-12);
        let (s, _) = switch(0.9 * rc + 1e-9, rc);
        assert!((s - 1.0).abs() < 1e-12);
        let h = 1e-6;
        for r in [0.55, 0.57, 0.59] {
            let fd = (switch(r + h, rc).0 - switch(r - h, rc).0) / (2.0 * h);
            assert!((fd - switch(r, rc).1).abs() < 1e-6);
        }
    }

    #[test]
    fn basis_derivative_matches_finite_difference() {
        let b = RadialBasis::new(0.6, 8);
        let (mut g, mut dg) = (vec![0.0; 8], vec![0.0; 8]);
        let (mut gp, mut gm, mut scratch) = (vec![0.0; 8], vec![0.0; 8], vec![0.0; 8]);
        let h = 1e-6;
        b.eval(0.31, &mut g, &mut dg);
        b.eval(0.31 + h, &mut gp, &mut scratch);
        b.eval(0.31 - h, &mut gm, &mut scratch);
        for k in 0..8 {
            assert!(((gp[k] - gm[k]) / (2.0 * h) - dg[k]).abs() < 1e-6);
        }
    }

    fn features(pos: &[Vec3], types: &[usize]) -> Vec<Vec<f64>> {
        let simbox = SimBox::open(Vec3::repeat(10.0)).unwrap();
        let pairs = find_pairs(pos, &simbox, 0.6, ListMode::Full, None).unwrap();
        descriptor(pos, types, 2, &simbox, &pairs, &RadialBasis::new(0.6, 8))
    }

    #[test]
    fn isolated_atom_has_zero_features() {
        let f = features(&[Vec3::repeat(1.0), Vec3::repeat(3.0)], &[0, 0]);
        assert!(f[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn equal_neighbours_add() {
        let c = Vec3::repeat(2.0);
        let one = features(&[c, c + Vec3::new(0.3, 0.0, 0.0)], &[0, 1]);
        let two = features(&[c, c + Vec3::new(0.3, 0.0, 0.0), c - Vec3::new(0.0, 0.3, 0.0)], &[0, 1, 1]);
        for (a, b) in one[0].iter().zip(&two[0]) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
        assert!(one[0][..8].iter().all(|&x| x == 0.0), "type-0 block stays empty");
    }

    #[test]
    fn rotation_leaves_features_unchanged() {
        let pos = vec![
            Vec3::new(2.0, 2.0, 2.0),
            Vec3::new(2.3, 2.1, 2.0),
            Vec3::new(1.9, 2.25, 2.2),
            Vec3::new(2.1, 1.8, 1.75),
        ];
        let types = [0, 1, 0, 1];
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let c = Vec3::repeat(2.0);
        let rotated: Vec<_> = pos.iter().map(|p| c + rot * (p - c)).collect();
        let (a, b) = (features(&pos, &types), features(&rotated, &types));
        for (fa, fb) in a.iter().zip(&b) {
            for (x, y) in fa.iter().zip(fb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
