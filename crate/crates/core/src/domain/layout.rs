use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};
use crate::state::State;

/// Slack on region boundaries so that rounding never drops a ghost.
const ZONE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridShape {
    /// All ranks along x.
    #[default]
    Slab,
    /// Near-cubic factorisation of the rank count.
    Balanced,
}

/// Arrangement of ranks; rank = x + nx·(y + ny·z).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankGrid {
    pub dims: [usize; 3],
}

impl RankGrid {
    pub fn new(n_ranks: usize, shape: GridShape) -> Result<Self> {
        if n_ranks == 0 {
            return Err(Error::Decomposition("at least one rank is required".into()));
        }
        let dims = match shape {
            GridShape::Slab => [n_ranks, 1, 1],
            GridShape::Balanced => {
                let mut best = [n_ranks, 1, 1];
                for a in 1..=n_ranks {
                    for b in 1..=a {
                        if n_ranks % (a * b) == 0 {
                            let c = n_ranks / (a * b);
                            if c <= b && a + b + c < best.iter().sum() {
                                best = [a, b, c];
                            }
                        }
                    }
                }
                best
            }
        };
        Ok(RankGrid { dims })
    }

    pub fn n_ranks(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn coords(&self, rank: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [rank % nx, (rank / nx) % ny, rank / (nx * ny)]
    }

    pub fn rank(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn is_divided(&self, axis: usize) -> bool {
        self.dims[axis] > 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: Vec3,
    pub hi: Vec3,
}

/// Copy of an atom held by a rank that does not own it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghost {
    pub global: usize,
    pub source: usize,
    /// Image offset in box lengths, applied to the wrapped position.
    pub shift: [i32; 3],
    /// Inside the upper half-shell used by the asymmetric convention.
    pub upper: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HaloMode {
    /// Half-shell: each boundary pair is resolved on exactly one rank.
    #[default]
    Asymmetric,
    /// Full shell: every owned atom sees all atoms within the halo.
    Symmetric,
}

impl HaloMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HaloMode::Asymmetric => "asymmetric",
            HaloMode::Symmetric => "symmetric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "asymmetric" => Some(HaloMode::Asymmetric),
            "symmetric" => Some(HaloMode::Symmetric),
            _ => None,
        }
    }
}

/// Spatial partition of the atoms over ranks plus each rank's ghost shell.
#[derive(Debug, Clone)]
pub struct DomainLayout {
    pub grid: RankGrid,
    pub simbox: SimBox,
    pub halo_width: f64,
    pub regions: Vec<Region>,
    pub owned: Vec<Vec<usize>>,
    /// Owning rank of every atom.
    pub owner: Vec<usize>,
    /// Full-shell ghosts per rank, sorted by (source, global, shift).
    pub ghosts: Vec<Vec<Ghost>>,
}

impl DomainLayout {
    pub fn n_ranks(&self) -> usize {
        self.grid.n_ranks()
    }

    fn cell_width(&self, axis: usize) -> f64 {
        self.simbox.lengths[axis] / self.grid.dims[axis] as f64
    }

    /// Rank whose region contains a wrapped point.
    pub fn rank_of_point(&self, p: &Vec3) -> usize {
        let mut c = [0usize; 3];
        for (d, cd) in c.iter_mut().enumerate() {
            let n = self.grid.dims[d];
            if n > 1 {
                let k = (p[d] / self.cell_width(d)).floor();
                *cd = (k.max(0.0) as usize).min(n - 1);
            }
        }
        self.grid.rank(c)
    }

    /// Box seen by one rank: periodic only along undivided axes.
    pub fn local_box(&self) -> SimBox {
        let mut b = self.simbox;
        for d in 0..3 {
            b.periodic[d] = self.simbox.periodic[d] && !self.grid.is_divided(d);
        }
        b
    }

    pub fn ghost_count(&self, mode: HaloMode) -> usize {
        self.ghosts
            .iter()
            .map(|g| g.iter().filter(|x| mode == HaloMode::Symmetric || x.upper).count())
            .sum()
    }

    /// Wrapped position shifted by a ghost's image offset.
    pub fn image_position(&self, wrapped: &Vec3, shift: [i32; 3]) -> Vec3 {
        Vec3::from_fn(|d, _| wrapped[d] + shift[d] as f64 * self.simbox.lengths[d])
    }

    /// True once some atom has left its owner's region by more than `skin`.
    pub fn needs_rebuild(&self, state: &State, skin: f64) -> bool {
        state.positions.iter().enumerate().any(|(a, r)| {
            let p = self.simbox.wrap(*r);
            let reg = &self.regions[self.owner[a]];
            (0..3).any(|d| {
                if !self.grid.is_divided(d) {
                    return false;
                }
                let l = self.simbox.lengths[d];
                let below = (reg.lo[d] - p[d]).rem_euclid(l);
                let above = (p[d] - reg.hi[d]).rem_euclid(l);
                let outside = p[d] < reg.lo[d] || p[d] >= reg.hi[d];
                outside && below.min(above) > skin
            })
        })
    }
}

/// Slab decomposition of `state` over `n_ranks`.
pub fn decompose(state: &State, n_ranks: usize, halo_width: f64) -> Result<DomainLayout> {
    decompose_on(state, RankGrid::new(n_ranks, GridShape::Slab)?, halo_width)
}

/// Decompose onto an explicit rank grid.
pub fn decompose_on(state: &State, grid: RankGrid, halo_width: f64) -> Result<DomainLayout> {
    let simbox = state.simbox;
    if !(halo_width > 0.0) {
        return Err(Error::Decomposition(format!("halo width must be positive, got {halo_width}")));
    }
    for d in 0..3 {
        if !grid.is_divided(d) {
            continue;
        }
        if !simbox.periodic[d] {
            return Err(Error::Decomposition(format!("axis {d} is not periodic and cannot be divided")));
        }
        let width = simbox.lengths[d] / grid.dims[d] as f64;
        if width < 2.0 * halo_width {
            return Err(Error::Decomposition(format!(
                "region width {width:.4} nm along axis {d} is below twice the halo width {halo_width} nm"
            )));
        }
    }
    let n_ranks = grid.n_ranks();
    let regions: Vec<Region> = (0..n_ranks)
        .map(|r| {
            let c = grid.coords(r);
            let lo = Vec3::from_fn(|d, _| c[d] as f64 * simbox.lengths[d] / grid.dims[d] as f64);
            let hi = Vec3::from_fn(|d, _| {
                if c[d] + 1 == grid.dims[d] {
                    simbox.lengths[d]
                } else {
                    (c[d] + 1) as f64 * simbox.lengths[d] / grid.dims[d] as f64
                }
            });
            Region { lo, hi }
        })
        .collect();
    let mut layout = DomainLayout {
        grid,
        simbox,
        halo_width,
        regions,
        owned: vec![Vec::new(); n_ranks],
        owner: Vec::with_capacity(state.n_atoms()),
        ghosts: vec![Vec::new(); n_ranks],
    };
    let wrapped: Vec<Vec3> = state.positions.iter().map(|r| simbox.wrap(*r)).collect();
    for (a, p) in wrapped.iter().enumerate() {
        let r = layout.rank_of_point(p);
        layout.owner.push(r);
        layout.owned[r].push(a);
    }

    let shifts_on = |d: usize| -> Vec<i32> {
        if grid.is_divided(d) {
            vec![-1, 0, 1]
        } else {
            vec![0]
        }
    };
    let mut shifts = Vec::new();
    for sx in shifts_on(0) {
        for sy in shifts_on(1) {
            for sz in shifts_on(2) {
                shifts.push([sx, sy, sz]);
            }
        }
    }
    let h = halo_width;
    for (r, reg) in layout.regions.iter().enumerate() {
        let ghosts = &mut layout.ghosts[r];
        for (a, p) in wrapped.iter().enumerate() {
            for &s in &shifts {
                if s == [0, 0, 0] && layout.owner[a] == r {
                    continue;
                }
                let q = Vec3::from_fn(|d, _| p[d] + s[d] as f64 * simbox.lengths[d]);
                let mut inside = true;
                let mut upper = true;
                for d in (0..3).filter(|&d| grid.is_divided(d)) {
                    inside &= q[d] >= reg.lo[d] - h - ZONE_EPS && q[d] < reg.hi[d] + h + ZONE_EPS;
                    upper &= q[d] >= reg.lo[d] - ZONE_EPS;
                }
                if inside {
                    ghosts.push(Ghost { global: a, source: layout.owner[a], shift: s, upper });
                }
            }
        }
        ghosts.sort_by_key(|g| (g.source, g.global, g.shift));
    }
    Ok(layout)
}
