//! Mimetic operators on the staggered grid.
//!
//! The discrete de Rham sequence is nodes --grad--> edges --curl--> faces.
//! Divergence of an edge field is the *weak* divergence
//! `D = -M_N⁻¹ Gᵀ M_E`, so `⟨G w, e⟩_E = -⟨w, D e⟩_N` holds exactly and
//! `D M_E⁻¹ Cᵀ = 0`. At interior nodes this is the usual central difference;
//! at boundary nodes it is the one-sided half-cell flux balance.
//!
//! All mass matrices are diagonal (clipped dual-cell volumes).

use std::ops::{Deref, DerefMut};

use crate::error::{check_len, Error, Result};
use crate::grid::{Block, EntityKind, StaggeredGrid};
use crate::sparse::SparseMatrix;

macro_rules! field_type {
    ($(#[$doc:meta])* $name:ident, $count:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(grid: &StaggeredGrid) -> Self {
                $name(vec![0.0; grid.$count()])
            }

            pub fn from_vec(grid: &StaggeredGrid, values: Vec<f64>) -> Result<Self> {
                check_len($what, grid.$count(), values.len())?;
                Ok($name(values))
            }

            pub fn check(&self, grid: &StaggeredGrid) -> Result<()> {
                check_len($what, grid.$count(), self.0.len())
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
    };
}

field_type!(
    /// One value per edge: tangential component of a vector field.
    EdgeField, edge_count, "edge field"
);
field_type!(
    /// One value per face: normal component of a vector field.
    FaceField, face_count, "face field"
);
field_type!(
    /// One value per node.
    NodeField, node_count, "node field"
);

#[inline]
fn shifted(p: [usize; 3], axis: usize) -> [usize; 3] {
    let mut q = p;
    q[axis] += 1;
    q
}

/// Discrete curl: circulation around each face divided by its area.
pub fn curl(grid: &StaggeredGrid, e: &EdgeField) -> Result<FaceField> {
    e.check(grid)?;
    let h = grid.spacing();
    let mut out = vec![0.0; grid.face_count()];
    for d in 0..3 {
        let (a, b) = ((d + 1) % 3, (d + 2) % 3);
        let fb = grid.faces(d);
        let (ea, eb) = (grid.edges(a), grid.edges(b));
        for local in 0..fb.len() {
            let p = fb.coords(local);
            let d_a_eb = (e[eb.index(shifted(p, a))] - e[eb.index(p)]) / h[a];
            let d_b_ea = (e[ea.index(shifted(p, b))] - e[ea.index(p)]) / h[b];
            out[fb.offset + local] = d_a_eb - d_b_ea;
        }
    }
    Ok(FaceField(out))
}

/// Discrete gradient: endpoint difference over edge length.
pub fn grad(grid: &StaggeredGrid, w: &NodeField) -> Result<EdgeField> {
    w.check(grid)?;
    let h = grid.spacing();
    let nb = grid.nodes();
    let mut out = vec![0.0; grid.edge_count()];
    for d in 0..3 {
        let eb = grid.edges(d);
        for local in 0..eb.len() {
            let p = eb.coords(local);
            out[eb.offset + local] = (w[nb.index(shifted(p, d))] - w[nb.index(p)]) / h[d];
        }
    }
    Ok(EdgeField(out))
}

/// Weak node divergence `-M_N⁻¹ Gᵀ M_E e`.
pub fn divergence(grid: &StaggeredGrid, e: &EdgeField) -> Result<NodeField> {
    e.check(grid)?;
    let h = grid.spacing();
    let nb = grid.nodes();
    let me = grid.edge_volumes();
    let mut flux = vec![0.0; grid.node_count()];
    for d in 0..3 {
        let eb = grid.edges(d);
        for local in 0..eb.len() {
            let p = eb.coords(local);
            let g = eb.offset + local;
            let q = me[g] * e[g] / h[d];
            flux[nb.index(p)] += q;
            flux[nb.index(shifted(p, d))] -= q;
        }
    }
    let mn = grid.node_volumes();
    Ok(NodeField(flux.iter().zip(mn).map(|(f, m)| f / m).collect()))
}

/// Source entities averaged onto one target entity: like-direction neighbours
/// at the nearest staggered positions (1, 2, 4 or 8 of them).
pub(crate) fn stencil_neighbors(from: &Block, to: &Block, p: [usize; 3]) -> Vec<usize> {
    let mut cand: [[isize; 2]; 3] = [[0; 2]; 3];
    let mut count = [0usize; 3];
    for a in 0..3 {
        let x = p[a] as isize;
        match (to.stagger[a], from.stagger[a]) {
            (s, t) if s == t => {
                cand[a][0] = x;
                count[a] = 1;
            }
            // target between two lattice positions
            (true, false) => {
                cand[a] = [x, x + 1];
                count[a] = 2;
            }
            // target on a lattice position, sources half a cell either side
            _ => {
                cand[a] = [x - 1, x];
                count[a] = 2;
            }
        }
    }
    let mut out = Vec::with_capacity(8);
    for &k in &cand[2][..count[2]] {
        for &j in &cand[1][..count[1]] {
            for &i in &cand[0][..count[0]] {
                if let Some(q) = from.checked([i, j, k]) {
                    out.push(from.index(q));
                }
            }
        }
    }
    out
}

fn target_blocks(grid: &StaggeredGrid, at: EntityKind) -> Vec<(usize, Block)> {
    match at {
        EntityKind::Node => vec![(usize::MAX, *grid.nodes())],
        EntityKind::Edge => (0..3).map(|d| (d, *grid.edges(d))).collect(),
        EntityKind::Face => (0..3).map(|d| (d, *grid.faces(d))).collect(),
    }
}

/// Averages an edge field into a full 3-vector at every node, edge or face.
///
/// Component `c` at a target is the mean of the nearest `c`-directed edges.
pub fn reconstruct_vector(grid: &StaggeredGrid, e: &EdgeField, at: EntityKind) -> Result<Vec<[f64; 3]>> {
    e.check(grid)?;
    let mut out = Vec::with_capacity(grid.count(at));
    for (_, tb) in target_blocks(grid, at) {
        for local in 0..tb.len() {
            let p = tb.coords(local);
            out.push(std::array::from_fn(|c| {
                let nb = stencil_neighbors(grid.edges(c), &tb, p);
                nb.iter().map(|&k| e[k]).sum::<f64>() / nb.len() as f64
            }));
        }
    }
    Ok(out)
}

/// Averages a face field (normal components) into a 3-vector at every node.
pub fn face_to_node_vector(grid: &StaggeredGrid, f: &FaceField) -> Result<Vec<[f64; 3]>> {
    f.check(grid)?;
    let nb = grid.nodes();
    Ok((0..nb.len())
        .map(|n| {
            let p = nb.coords(n);
            std::array::from_fn(|c| {
                let nbrs = stencil_neighbors(grid.faces(c), nb, p);
                nbrs.iter().map(|&k| f[k]).sum::<f64>() / nbrs.len() as f64
            })
        })
        .collect())
}

/// Averages nodal values onto edge midpoints or face centres.
pub fn node_average(grid: &StaggeredGrid, w: &[f64], at: EntityKind) -> Result<Vec<f64>> {
    check_len("node values", grid.node_count(), w.len())?;
    let mut out = Vec::with_capacity(grid.count(at));
    for (_, tb) in target_blocks(grid, at) {
        for local in 0..tb.len() {
            let nbrs = stencil_neighbors(grid.nodes(), &tb, tb.coords(local));
            out.push(nbrs.iter().map(|&k| w[k]).sum::<f64>() / nbrs.len() as f64);
        }
    }
    Ok(out)
}

/// Sparse averaging matrix taking `component`-directed edges to a component
/// value at every entity of kind `at`.
pub fn edge_component_average_matrix(grid: &StaggeredGrid, component: usize, at: EntityKind) -> Result<SparseMatrix> {
    let src = grid.edges(component);
    let mut trip = Vec::new();
    let mut row = 0;
    for (_, tb) in target_blocks(grid, at) {
        for local in 0..tb.len() {
            let nbrs = stencil_neighbors(src, &tb, tb.coords(local));
            let w = 1.0 / nbrs.len() as f64;
            trip.extend(nbrs.into_iter().map(|k| (row, k, w)));
            row += 1;
        }
    }
    SparseMatrix::from_triplets(grid.count(at), grid.edge_count(), trip)
}

/// Which diagonal mass an inner product uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerKind {
    Edge,
    Face,
    Node,
    /// Trapezoidal surface quadrature on Γ₂ over nodal values.
    Gamma2,
}

pub fn masses(grid: &StaggeredGrid, kind: InnerKind) -> &[f64] {
    match kind {
        InnerKind::Edge => grid.edge_volumes(),
        InnerKind::Face => grid.face_volumes(),
        InnerKind::Node => grid.node_volumes(),
        InnerKind::Gamma2 => grid.gamma2_weights(),
    }
}

/// `Σ weightᵢ · massᵢ · aᵢ · bᵢ`.
pub fn inner(grid: &StaggeredGrid, kind: InnerKind, a: &[f64], b: &[f64], weight: Option<&[f64]>) -> Result<f64> {
    let m = masses(grid, kind);
    check_len("inner product left operand", m.len(), a.len())?;
    check_len("inner product right operand", m.len(), b.len())?;
    match weight {
        None => Ok(m.iter().zip(a).zip(b).map(|((m, a), b)| m * a * b).sum()),
        Some(w) => {
            check_len("inner product weight", m.len(), w.len())?;
            if let Some(k) = w.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "inner product weight at {k} is not positive ({})",
                    w[k]
                )));
            }
            Ok(m.iter()
                .zip(a)
                .zip(b)
                .zip(w)
                .map(|(((m, a), b), w)| w * m * a * b)
                .sum())
        }
    }
}

/// Mass-weighted squared L² norm.
pub fn norm_sq(grid: &StaggeredGrid, kind: InnerKind, a: &[f64]) -> f64 {
    masses(grid, kind).iter().zip(a).map(|(m, a)| m * a * a).sum()
}

/// Mass-weighted Lᵖ norm raised to the p-th power.
pub fn lp_pow(grid: &StaggeredGrid, kind: InnerKind, a: &[f64], p: f64) -> f64 {
    masses(grid, kind).iter().zip(a).map(|(m, a)| m * a.abs().powf(p)).sum()
}

/// Linear operators that [`assemble`] can turn into matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum OpSpec {
    Curl,
    Divergence,
    Grad,
    Mass(EntityKind),
    /// `Cᵀ M_F diag(w) C` (bilinear-form matrix, edge × edge).
    CurlCurl {
        face_weight: Option<Vec<f64>>,
    },
    /// `Dᵀ M_N D` (edge × edge).
    GradDiv,
    /// `Gᵀ M_E diag(w) G` (node × node).
    NodeLaplacian {
        edge_weight: Option<Vec<f64>>,
    },
    /// Linear combination of same-shaped operators.
    Sum(Vec<(f64, OpSpec)>),
}

impl OpSpec {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "curl" => OpSpec::Curl,
            "div" | "divergence" => OpSpec::Divergence,
            "grad" => OpSpec::Grad,
            "mass_node" => OpSpec::Mass(EntityKind::Node),
            "mass_edge" => OpSpec::Mass(EntityKind::Edge),
            "mass_face" => OpSpec::Mass(EntityKind::Face),
            "curlcurl" => OpSpec::CurlCurl { face_weight: None },
            "graddiv" => OpSpec::GradDiv,
            "laplacian" => OpSpec::NodeLaplacian { edge_weight: None },
            other => return Err(Error::InvalidArgument(format!("unknown operator spec '{other}'"))),
        })
    }
}

fn curl_matrix(grid: &StaggeredGrid) -> Result<SparseMatrix> {
    let h = grid.spacing();
    let mut trip = Vec::with_capacity(4 * grid.face_count());
    for d in 0..3 {
        let (a, b) = ((d + 1) % 3, (d + 2) % 3);
        let fb = grid.faces(d);
        let (ea, eb) = (grid.edges(a), grid.edges(b));
        for local in 0..fb.len() {
            let p = fb.coords(local);
            let r = fb.offset + local;
            trip.push((r, eb.index(shifted(p, a)), 1.0 / h[a]));
            trip.push((r, eb.index(p), -1.0 / h[a]));
            trip.push((r, ea.index(shifted(p, b)), -1.0 / h[b]));
            trip.push((r, ea.index(p), 1.0 / h[b]));
        }
    }
    SparseMatrix::from_triplets(grid.face_count(), grid.edge_count(), trip)
}

fn grad_matrix(grid: &StaggeredGrid) -> Result<SparseMatrix> {
    let h = grid.spacing();
    let nb = grid.nodes();
    let mut trip = Vec::with_capacity(2 * grid.edge_count());
    for d in 0..3 {
        let eb = grid.edges(d);
        for local in 0..eb.len() {
            let p = eb.coords(local);
            trip.push((eb.offset + local, nb.index(shifted(p, d)), 1.0 / h[d]));
            trip.push((eb.offset + local, nb.index(p), -1.0 / h[d]));
        }
    }
    SparseMatrix::from_triplets(grid.edge_count(), grid.node_count(), trip)
}

fn mass_matrix(grid: &StaggeredGrid, kind: EntityKind) -> SparseMatrix {
    SparseMatrix::diagonal_matrix(match kind {
        EntityKind::Node => grid.node_volumes(),
        EntityKind::Edge => grid.edge_volumes(),
        EntityKind::Face => grid.face_volumes(),
    })
}

fn divergence_matrix(grid: &StaggeredGrid) -> Result<SparseMatrix> {
    let inv_mn: Vec<f64> = grid.node_volumes().iter().map(|m| -1.0 / m).collect();
    Ok(grad_matrix(grid)?
        .transpose()
        .scale_cols(grid.edge_volumes())
        .scale_rows(&inv_mn))
}

/// Assembles the matrix of a linear operator.
pub fn assemble(grid: &StaggeredGrid, spec: &OpSpec) -> Result<SparseMatrix> {
    match spec {
        OpSpec::Curl => curl_matrix(grid),
        OpSpec::Grad => grad_matrix(grid),
        OpSpec::Divergence => divergence_matrix(grid),
        OpSpec::Mass(kind) => Ok(mass_matrix(grid, *kind)),
        OpSpec::CurlCurl { face_weight } => {
            let c = curl_matrix(grid)?;
            let mut w = grid.face_volumes().to_vec();
            if let Some(fw) = face_weight {
                check_len("curl-curl face weight", w.len(), fw.len())?;
                w.iter_mut().zip(fw).for_each(|(m, x)| *m *= x);
            }
            c.transpose().matmul(&c.scale_rows(&w))
        }
        OpSpec::GradDiv => {
            let d = divergence_matrix(grid)?;
            d.transpose().matmul(&d.scale_rows(grid.node_volumes()))
        }
        OpSpec::NodeLaplacian { edge_weight } => {
            let g = grad_matrix(grid)?;
            let mut w = grid.edge_volumes().to_vec();
            if let Some(ew) = edge_weight {
                check_len("laplacian edge weight", w.len(), ew.len())?;
                w.iter_mut().zip(ew).for_each(|(m, x)| *m *= x);
            }
            g.transpose().matmul(&g.scale_rows(&w))
        }
        OpSpec::Sum(terms) => {
            let mut acc: Option<SparseMatrix> = None;
            for (coef, term) in terms {
                let m = assemble(grid, term)?;
                acc = Some(match acc {
                    None => m.scaled(*coef),
                    Some(a) => a.add_scaled(1.0, &m, *coef)?,
                });
            }
            acc.ok_or_else(|| Error::InvalidArgument("empty operator sum".into()))
        }
    }
}
