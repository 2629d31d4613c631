//! Uniform staggered hexahedral grid on a box.
//!
//! Nodes sit at lattice points, edges at edge midpoints and faces at face
//! centres. Each entity family is a [`Block`]: a rectangular array of entities
//! that share one staggering pattern (half-offset along some axes). Global
//! indices are lexicographic by (direction, k, j, i) with `i` fastest.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the six planar faces of the box domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoxFace {
    #[serde(rename = "x-")]
    XMinus,
    #[serde(rename = "x+")]
    XPlus,
    #[serde(rename = "y-")]
    YMinus,
    #[serde(rename = "y+")]
    YPlus,
    #[serde(rename = "z-")]
    ZMinus,
    #[serde(rename = "z+")]
    ZPlus,
}

impl BoxFace {
    pub const ALL: [BoxFace; 6] = [
        BoxFace::XMinus,
        BoxFace::XPlus,
        BoxFace::YMinus,
        BoxFace::YPlus,
        BoxFace::ZMinus,
        BoxFace::ZPlus,
    ];

    pub fn axis(self) -> usize {
        match self {
            BoxFace::XMinus | BoxFace::XPlus => 0,
            BoxFace::YMinus | BoxFace::YPlus => 1,
            BoxFace::ZMinus | BoxFace::ZPlus => 2,
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, BoxFace::XPlus | BoxFace::YPlus | BoxFace::ZPlus)
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis()] = if self.is_upper() { 1.0 } else { -1.0 };
        n
    }

    pub fn label(self) -> &'static str {
        match self {
            BoxFace::XMinus => "x-",
            BoxFace::XPlus => "x+",
            BoxFace::YMinus => "y-",
            BoxFace::YPlus => "y+",
            BoxFace::ZMinus => "z-",
            BoxFace::ZPlus => "z+",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        BoxFace::ALL
            .into_iter()
            .find(|f| f.label() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown box face '{s}' (expected x-, x+, y-, y+, z-, z+)")))
    }
}

impl fmt::Display for BoxFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityKind {
    Node,
    Edge,
    Face,
}

impl EntityKind {
    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Node => "node",
            EntityKind::Edge => "edge",
            EntityKind::Face => "face",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    /// Dirichlet part of the boundary (owns seams shared with Γ₂).
    Gamma1,
    /// Radiation part of the boundary.
    Gamma2,
}

/// A rectangular family of entities with a common staggering pattern.
///
/// `stagger[a]` is true when the entities sit at half-integer positions along
/// axis `a` (so there are `n_a` of them instead of `n_a + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub stagger: [bool; 3],
    pub dims: [usize; 3],
    pub offset: usize,
}

impl Block {
    fn new(cells: [usize; 3], stagger: [bool; 3], offset: usize) -> Self {
        let dims = std::array::from_fn(|a| cells[a] + usize::from(!stagger[a]));
        Block { stagger, dims, offset }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn local(&self, p: [usize; 3]) -> usize {
        debug_assert!((0..3).all(|a| p[a] < self.dims[a]));
        p[0] + self.dims[0] * (p[1] + self.dims[1] * p[2])
    }

    /// Global index (offset included).
    #[inline]
    pub fn index(&self, p: [usize; 3]) -> usize {
        self.offset + self.local(p)
    }

    #[inline]
    pub fn coords(&self, local: usize) -> [usize; 3] {
        let i = local % self.dims[0];
        let rest = local / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Returns the in-range coordinates, if any.
    #[inline]
    pub fn checked(&self, p: [isize; 3]) -> Option<[usize; 3]> {
        if (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a]) {
            Some([p[0] as usize, p[1] as usize, p[2] as usize])
        } else {
            None
        }
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

fn unit_stagger(axis: usize) -> [bool; 3] {
    let mut s = [false; 3];
    s[axis] = true;
    s
}

fn face_stagger(normal: usize) -> [bool; 3] {
    let mut s = [true; 3];
    s[normal] = false;
    s
}

#[derive(Clone, Debug)]
pub struct StaggeredGrid {
    extents: [f64; 3],
    cells: [usize; 3],
    spacing: [f64; 3],
    node_block: Block,
    edge_blocks: [Block; 3],
    face_blocks: [Block; 3],
    gamma1: Vec<BoxFace>,
    tangential_boundary_edge: Vec<bool>,
    node_class: Vec<NodeClass>,
    gamma2_weights: Vec<f64>,
    node_volume: Vec<f64>,
    edge_volume: Vec<f64>,
    face_volume: Vec<f64>,
}

impl StaggeredGrid {
    /// Builds the grid on `[0,Lx]×[0,Ly]×[0,Lz]` with `cells` cells per axis.
    ///
    /// `gamma1_faces` are the Dirichlet faces; the rest of the boundary is Γ₂.
    /// Both parts must be nonempty.
    pub fn build(extents: [f64; 3], cells: [usize; 3], gamma1_faces: &[BoxFace]) -> Result<Self> {
        for a in 0..3 {
            if !(extents[a].is_finite() && extents[a] > 0.0) {
                return Err(Error::Construction(format!(
                    "extent along axis {a} must be positive and finite, got {}",
                    extents[a]
                )));
            }
            if cells[a] < 2 {
                return Err(Error::Construction(format!(
                    "cell count along axis {a} must be at least 2, got {}",
                    cells[a]
                )));
            }
        }
        let mut gamma1: Vec<BoxFace> = gamma1_faces.to_vec();
        gamma1.sort();
        gamma1.dedup();
        if gamma1.is_empty() {
            return Err(Error::Config(
                "gamma1_faces is empty: Γ₁ (Dirichlet part) must be nonempty".into(),
            ));
        }
        if gamma1.len() == 6 {
            return Err(Error::Config(
                "gamma1_faces covers all six faces: Γ₂ (radiation part) must be nonempty".into(),
            ));
        }

        let spacing = std::array::from_fn(|a| extents[a] / cells[a] as f64);
        let node_block = Block::new(cells, [false; 3], 0);
        let mut offset = 0;
        let edge_blocks = std::array::from_fn(|d| {
            let b = Block::new(cells, unit_stagger(d), offset);
            offset += b.len();
            b
        });
        offset = 0;
        let face_blocks = std::array::from_fn(|d| {
            let b = Block::new(cells, face_stagger(d), offset);
            offset += b.len();
            b
        });

        let mut grid = StaggeredGrid {
            extents,
            cells,
            spacing,
            node_block,
            edge_blocks,
            face_blocks,
            gamma1,
            tangential_boundary_edge: Vec::new(),
            node_class: Vec::new(),
            gamma2_weights: Vec::new(),
            node_volume: Vec::new(),
            edge_volume: Vec::new(),
            face_volume: Vec::new(),
        };
        grid.node_volume = grid.block_volumes(&grid.node_block);
        grid.edge_volume = grid.edge_blocks.iter().flat_map(|b| grid.block_volumes(b)).collect();
        grid.face_volume = grid.face_blocks.iter().flat_map(|b| grid.block_volumes(b)).collect();

        let mut tangential = vec![false; grid.edge_count()];
        for (d, blk) in grid.edge_blocks.iter().enumerate() {
            for local in 0..blk.len() {
                let p = blk.coords(local);
                tangential[blk.offset + local] = (0..3).any(|a| a != d && (p[a] == 0 || p[a] == cells[a]));
            }
        }
        grid.tangential_boundary_edge = tangential;

        let mut class = vec![NodeClass::Interior; grid.node_count()];
        for (n, c) in class.iter_mut().enumerate() {
            let p = node_block.coords(n);
            let on = |f: BoxFace| p[f.axis()] == if f.is_upper() { cells[f.axis()] } else { 0 };
            if BoxFace::ALL.into_iter().any(on) {
                *c = if grid.gamma1.iter().any(|&f| on(f)) {
                    NodeClass::Gamma1
                } else {
                    NodeClass::Gamma2
                };
            }
        }
        grid.node_class = class;

        let mut w = vec![0.0; grid.node_count()];
        for face in grid.gamma2_faces() {
            for (n, weight) in grid.box_face_node_weights(face) {
                w[n] += weight;
            }
        }
        grid.gamma2_weights = w;
        Ok(grid)
    }

    /// Control volumes of one block: the dual cell clipped to the domain.
    fn block_volumes(&self, blk: &Block) -> Vec<f64> {
        (0..blk.len())
            .map(|local| {
                let p = blk.coords(local);
                (0..3)
                    .map(|a| {
                        let half = !blk.stagger[a] && (p[a] == 0 || p[a] == self.cells[a]);
                        self.spacing[a] * if half { 0.5 } else { 1.0 }
                    })
                    .product()
            })
            .collect()
    }

    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.node_block.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_blocks.iter().map(Block::len).sum()
    }

    pub fn face_count(&self) -> usize {
        self.face_blocks.iter().map(Block::len).sum()
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        match kind {
            EntityKind::Node => self.node_count(),
            EntityKind::Edge => self.edge_count(),
            EntityKind::Face => self.face_count(),
        }
    }

    pub fn nodes(&self) -> &Block {
        &self.node_block
    }

    /// Block of edges directed along `axis`.
    pub fn edges(&self, axis: usize) -> &Block {
        &self.edge_blocks[axis]
    }

    /// Block of faces with normal along `axis`.
    pub fn faces(&self, axis: usize) -> &Block {
        &self.face_blocks[axis]
    }

    pub fn gamma1_faces(&self) -> &[BoxFace] {
        &self.gamma1
    }

    pub fn gamma2_faces(&self) -> Vec<BoxFace> {
        BoxFace::ALL.into_iter().filter(|f| !self.gamma1.contains(f)).collect()
    }

    pub fn tangential_boundary_edges(&self) -> &[bool] {
        &self.tangential_boundary_edge
    }

    pub fn node_class(&self) -> &[NodeClass] {
        &self.node_class
    }

    pub fn node_volumes(&self) -> &[f64] {
        &self.node_volume
    }

    pub fn edge_volumes(&self) -> &[f64] {
        &self.edge_volume
    }

    pub fn face_volumes(&self) -> &[f64] {
        &self.face_volume
    }

    /// Trapezoidal surface weights on Γ₂, one per node (zero off Γ₂).
    pub fn gamma2_weights(&self) -> &[f64] {
        &self.gamma2_weights
    }

    /// Nodes of one box face with their trapezoidal (quarter-cell) area weights.
    pub fn box_face_node_weights(&self, face: BoxFace) -> Vec<(usize, f64)> {
        let axis = face.axis();
        let fixed = if face.is_upper() { self.cells[axis] } else { 0 };
        let blk = &self.node_block;
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut out = Vec::with_capacity(blk.dims[a] * blk.dims[b]);
        for ib in 0..blk.dims[b] {
            for ia in 0..blk.dims[a] {
                let mut p = [0; 3];
                p[axis] = fixed;
                p[a] = ia;
                p[b] = ib;
                let wa = if ia == 0 || ia == self.cells[a] { 0.5 } else { 1.0 };
                let wb = if ib == 0 || ib == self.cells[b] { 0.5 } else { 1.0 };
                out.push((blk.index(p), wa * wb * self.spacing[a] * self.spacing[b]));
            }
        }
        out
    }

    /// Total area of Γ₂.
    pub fn gamma2_area(&self) -> f64 {
        self.gamma2_faces()
            .into_iter()
            .map(|f| {
                let ax = f.axis();
                self.extents[(ax + 1) % 3] * self.extents[(ax + 2) % 3]
            })
            .sum()
    }

    /// Physical position of the entity at block coordinates `p`.
    #[inline]
    pub fn position(&self, blk: &Block, p: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| {
            let shift = if blk.stagger[a] { 0.5 } else { 0.0 };
            (p[a] as f64 + shift) * self.spacing[a]
        })
    }

    /// Splits a global edge index into (direction, coordinates).
    pub fn edge_location(&self, index: usize) -> Result<(usize, [usize; 3])> {
        split_index(&self.edge_blocks, index, "edge")
    }

    /// Splits a global face index into (normal direction, coordinates).
    pub fn face_location(&self, index: usize) -> Result<(usize, [usize; 3])> {
        split_index(&self.face_blocks, index, "face")
    }

    /// Midpoint of a node, edge or face.
    pub fn entity_center(&self, kind: EntityKind, index: usize) -> Result<[f64; 3]> {
        match kind {
            EntityKind::Node => {
                if index >= self.node_count() {
                    return Err(Error::IndexOutOfRange {
                        kind: "node",
                        index,
                        count: self.node_count(),
                    });
                }
                Ok(self.position(&self.node_block, self.node_block.coords(index)))
            }
            EntityKind::Edge => {
                let (d, p) = self.edge_location(index)?;
                Ok(self.position(&self.edge_blocks[d], p))
            }
            EntityKind::Face => {
                let (d, p) = self.face_location(index)?;
                Ok(self.position(&self.face_blocks[d], p))
            }
        }
    }

    /// Node positions in index order.
    pub fn node_positions(&self) -> Vec<[f64; 3]> {
        let blk = &self.node_block;
        (0..blk.len()).map(|n| self.position(blk, blk.coords(n))).collect()
    }

    /// Edge midpoints with their directions, in index order.
    pub fn edge_positions(&self) -> Vec<(usize, [f64; 3])> {
        self.edge_blocks
            .iter()
            .enumerate()
            .flat_map(|(d, blk)| (0..blk.len()).map(move |l| (d, self.position(blk, blk.coords(l)))))
            .collect()
    }

    /// Face centres with their normal directions, in index order.
    pub fn face_positions(&self) -> Vec<(usize, [f64; 3])> {
        self.face_blocks
            .iter()
            .enumerate()
            .flat_map(|(d, blk)| (0..blk.len()).map(move |l| (d, self.position(blk, blk.coords(l)))))
            .collect()
    }

    /// Mask of nodes that carry an unknown of the heat problem (not on Γ₁).
    pub fn free_node_mask(&self) -> Vec<bool> {
        self.node_class.iter().map(|&c| c != NodeClass::Gamma1).collect()
    }

    /// Mask of nodes strictly inside the domain.
    pub fn interior_node_mask(&self) -> Vec<bool> {
        self.node_class.iter().map(|&c| c == NodeClass::Interior).collect()
    }
}

fn split_index(blocks: &[Block; 3], index: usize, kind: &'static str) -> Result<(usize, [usize; 3])> {
    for (d, blk) in blocks.iter().enumerate() {
        if blk.range().contains(&index) {
            return Ok((d, blk.coords(index - blk.offset)));
        }
    }
    Err(Error::IndexOutOfRange {
        kind,
        index,
        count: blocks.iter().map(Block::len).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> StaggeredGrid {
        StaggeredGrid::build([1.0; 3], [n; 3], &[BoxFace::ZMinus]).unwrap()
    }

    #[test]
    fn counts_on_two_cubed() {
        let g = unit(2);
        assert_eq!(g.node_count(), 27);
        assert_eq!(g.edges(0).len(), 18);
        assert_eq!(g.edge_count(), 54);
        assert_eq!(g.face_count(), 36);
        let gamma1 = g.node_class().iter().filter(|&&c| c == NodeClass::Gamma1).count();
        assert_eq!(gamma1, 9);
    }

    #[test]
    fn spacing_is_extent_over_cells() {
        let g = StaggeredGrid::build([1.0, 2.0, 3.0], [4, 4, 4], &[BoxFace::ZMinus]).unwrap();
        assert_eq!(g.spacing(), [0.25, 0.5, 0.75]);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            StaggeredGrid::build([1.0; 3], [1, 2, 2], &[BoxFace::ZMinus]),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            StaggeredGrid::build([1.0, 0.0, 1.0], [2, 2, 2], &[BoxFace::ZMinus]),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            StaggeredGrid::build([1.0; 3], [2; 3], &[]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            StaggeredGrid::build([1.0; 3], [2; 3], &BoxFace::ALL),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn closed_form_counts_small_sweep() {
        for nx in 2..=8 {
            for ny in 2..=8 {
                for nz in [2, 5, 8] {
                    let g = StaggeredGrid::build([1.0; 3], [nx, ny, nz], &[BoxFace::XPlus]).unwrap();
                    assert_eq!(g.node_count(), (nx + 1) * (ny + 1) * (nz + 1));
                    assert_eq!(
                        g.edge_count(),
                        nx * (ny + 1) * (nz + 1) + (nx + 1) * ny * (nz + 1) + (nx + 1) * (ny + 1) * nz
                    );
                    assert_eq!(
                        g.face_count(),
                        (nx + 1) * ny * nz + nx * (ny + 1) * nz + nx * ny * (nz + 1)
                    );
                }
            }
        }
    }

    #[test]
    fn entity_centers() {
        let g = unit(2);
        let n = g.nodes().index([1, 1, 1]);
        assert_eq!(g.entity_center(EntityKind::Node, n).unwrap(), [0.5, 0.5, 0.5]);
        assert_eq!(g.entity_center(EntityKind::Edge, 0).unwrap(), [0.25, 0.0, 0.0]);
        assert!(g.entity_center(EntityKind::Face, g.face_count()).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = StaggeredGrid::build([1.0; 3], [3, 4, 2], &[BoxFace::ZMinus]).unwrap();
        for e in 0..g.edge_count() {
            let (d, p) = g.edge_location(e).unwrap();
            assert_eq!(g.edges(d).index(p), e);
        }
        for f in 0..g.face_count() {
            let (d, p) = g.face_location(f).unwrap();
            assert_eq!(g.faces(d).index(p), f);
        }
        for n in 0..g.node_count() {
            assert_eq!(g.nodes().index(g.nodes().coords(n)), n);
        }
    }

    #[test]
    fn gamma2_weights_sum_to_area() {
        let g = unit(3);
        let s: f64 = g.gamma2_weights().iter().sum();
        assert!((s - 5.0).abs() < 1e-14);
        let g = StaggeredGrid::build([1.0, 2.0, 0.5], [3, 5, 4], &[BoxFace::XMinus, BoxFace::YPlus]).unwrap();
        let s: f64 = g.gamma2_weights().iter().sum();
        assert!((s - g.gamma2_area()).abs() < 1e-13 * g.gamma2_area());
    }

    #[test]
    fn control_volumes_partition_domain() {
        let g = StaggeredGrid::build([1.0, 2.0, 0.5], [3, 5, 4], &[BoxFace::ZMinus]).unwrap();
        let v = g.volume();
        let sum_nodes: f64 = g.node_volumes().iter().sum();
        assert!((sum_nodes - v).abs() < 1e-13);
        for d in 0..3 {
            let s: f64 = g.edge_volumes()[g.edges(d).range()].iter().sum();
            assert!((s - v).abs() < 1e-13);
            let s: f64 = g.face_volumes()[g.faces(d).range()].iter().sum();
            assert!((s - v).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_classification() {
        let g = unit(3);
        for (e, &t) in g.tangential_boundary_edges().iter().enumerate() {
            let (d, p) = g.edge_location(e).unwrap();
            let expect = (0..3).any(|a| a != d && (p[a] == 0 || p[a] == 3));
            assert_eq!(t, expect);
        }
        // seam node on z=0 and x=0 belongs to Γ₁
        assert_eq!(g.node_class()[g.nodes().index([0, 1, 0])], NodeClass::Gamma1);
        assert_eq!(g.node_class()[g.nodes().index([0, 1, 1])], NodeClass::Gamma2);
        assert_eq!(g.node_class()[g.nodes().index([1, 1, 1])], NodeClass::Interior);
    }
}
