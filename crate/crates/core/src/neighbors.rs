//! Cell-list accelerated Verlet neighbour lists.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};
use crate::state::State;
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ListMode {
    /// Each unordered pair once, `i < j`.
    Half,
    /// Both orientations of every pair.
    Full,
}

/// Spatial binning with cells at least `min_cell` wide on every axis.
#[derive(Debug, Clone)]
pub struct CellGrid {
    pub origin: Vec3,
    pub cell_size: Vec3,
    pub dims: [usize; 3],
    pub cells: Vec<Vec<usize>>,
    periodic: [bool; 3],
}

impl CellGrid {
    pub fn build(positions: &[Vec3], simbox: &SimBox, min_cell: f64) -> CellGrid {
        let mut origin = Vec3::zeros();
        let mut extent = simbox.lengths;
        for d in 0..3 {
            if !simbox.periodic[d] {
                let (lo, hi) = positions
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[d]), hi.max(r[d])));
                if lo.is_finite() {
                    origin[d] = lo;
                    extent[d] = (hi - lo).max(min_cell);
                } else {
                    extent[d] = min_cell;
                }
            }
        }
        let mut dims = [1usize; 3];
        let mut cell_size = Vec3::zeros();
        for d in 0..3 {
            dims[d] = ((extent[d] / min_cell).floor() as usize).max(1);
            cell_size[d] = extent[d] / dims[d] as f64;
        }
        let mut grid = CellGrid {
            origin,
            cell_size,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
            periodic: simbox.periodic,
        };
        for (i, r) in positions.iter().enumerate() {
            let c = grid.cell_of(&simbox.wrap(*r));
            grid.cells[c].push(i);
        }
        grid
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn cell_of(&self, r: &Vec3) -> usize {
        let mut c = [0usize; 3];
        for d in 0..3 {
            let x = ((r[d] - self.origin[d]) / self.cell_size[d]).floor();
            c[d] = (x.max(0.0) as usize).min(self.dims[d] - 1);
        }
        self.flat(c)
    }

    /// Distinct cells in the 3×3×3 stencil around `cell`, ascending.
    pub fn stencil(&self, cell: usize) -> Vec<usize> {
        let cx = cell % self.dims[0];
        let cy = (cell / self.dims[0]) % self.dims[1];
        let cz = cell / (self.dims[0] * self.dims[1]);
        let base = [cx as i64, cy as i64, cz as i64];
        let mut out = Vec::with_capacity(27);
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                'next: for dx in -1..=1i64 {
                    let mut c = [0usize; 3];
                    for (d, off) in [dx, dy, dz].into_iter().enumerate() {
                        let n = self.dims[d] as i64;
                        let mut k = base[d] + off;
                        if k < 0 || k >= n {
                            if !self.periodic[d] {
                                continue 'next;
                            }
                            k = k.rem_euclid(n);
                        }
                        c[d] = k as usize;
                    }
                    out.push(self.flat(c));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// All pairs within `range` (minimum image), exclusions removed, sorted.
pub fn find_pairs(
    positions: &[Vec3],
    simbox: &SimBox,
    range: f64,
    mode: ListMode,
    exclusions: Option<&[BTreeSet<usize>]>,
) -> Result<Vec<(usize, usize)>> {
    if let Some(lmin) = simbox.min_periodic_length() {
        if range > lmin / 2.0 {
            return Err(Error::Geometry(format!(
                "pair range {range} nm exceeds half the smallest periodic box length {lmin} nm"
            )));
        }
    }
    if !(range > 0.0) {
        return Err(Error::Geometry(format!("pair range must be positive, got {range}")));
    }
    let grid = CellGrid::build(positions, simbox, range);
    let range2 = range * range;
    let mut pairs = Vec::new();
    for (c, members) in grid.cells.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        for c2 in grid.stencil(c) {
            for &i in members {
                for &j in &grid.cells[c2] {
                    if i < j && simbox.delta(&positions[i], &positions[j]).norm_squared() <= range2 {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    if let Some(excl) = exclusions {
        pairs = apply_exclusions(pairs, excl);
    }
    if mode == ListMode::Full {
        let mirrored: Vec<_> = pairs.iter().map(|&(i, j)| (j, i)).collect();
        pairs.extend(mirrored);
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// Drop excluded pairs, keeping the order of the survivors.
pub fn apply_exclusions(pairs: Vec<(usize, usize)>, exclusions: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    pairs
        .into_iter()
        .filter(|&(i, j)| !exclusions[i].contains(&j))
        .collect()
}

#[derive(Debug, Clone)]
pub struct NeighborList {
    pub cutoff: f64,
    pub skin: f64,
    pub pairs: Vec<(usize, usize)>,
    pub reference_positions: Vec<Vec3>,
    pub reference_box: SimBox,
    pub mode: ListMode,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Rebuild test against arbitrary positions (e.g. a subset of the state).
    /// A rescaled box is tolerated: reference positions are mapped through
    /// the per-axis length ratio and the skin budget shrinks with the box.
    pub fn needs_rebuild_for(&self, positions: &[Vec3], simbox: &SimBox) -> bool {
        if positions.len() != self.reference_positions.len() || simbox.periodic != self.reference_box.periodic {
            return true;
        }
        if *simbox == self.reference_box {
            let limit2 = (0.5 * self.skin).powi(2);
            return positions
                .iter()
                .zip(&self.reference_positions)
                .any(|(r, r0)| simbox.delta(r0, r).norm_squared() > limit2);
        }
        let ratio = simbox.lengths.component_div(&self.reference_box.lengths);
        // a pair listed at rc + skin sits at shrink * (rc + skin) after scaling
        let budget = 0.5 * (ratio.min() * (self.cutoff + self.skin) - self.cutoff);
        if budget <= 0.0 {
            return true;
        }
        let limit2 = budget * budget;
        positions
            .iter()
            .zip(&self.reference_positions)
            .any(|(r, r0)| simbox.delta(&r0.component_mul(&ratio), r).norm_squared() > limit2)
    }
}

pub fn build_neighbor_list(state: &State, topo: &Topology, rc: f64, skin: f64, mode: ListMode) -> Result<NeighborList> {
    build_for_positions(&state.positions, &state.simbox, Some(&topo.exclusions), rc, skin, mode)
}

pub fn build_for_positions(
    positions: &[Vec3],
    simbox: &SimBox,
    exclusions: Option<&[BTreeSet<usize>]>,
    rc: f64,
    skin: f64,
    mode: ListMode,
) -> Result<NeighborList> {
    if skin < 0.0 {
        return Err(Error::Geometry(format!("skin must be non-negative, got {skin}")));
    }
    Ok(NeighborList {
        cutoff: rc,
        skin,
        pairs: find_pairs(positions, simbox, rc + skin, mode, exclusions)?,
        reference_positions: positions.to_vec(),
        reference_box: *simbox,
        mode,
    })
}

/// True when some atom moved more than half the skin since the list was built.
pub fn needs_rebuild(list: &NeighborList, state: &State) -> bool {
    list.needs_rebuild_for(&state.positions, &state.simbox)
}
