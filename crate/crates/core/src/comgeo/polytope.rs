//! Vertex- and inequality-described polytopes and the convex-hull queries
//! built on the simplex engine.

use serde::{Deserialize, Serialize};

use super::lp::{LinearProgram, LpOutcome};
use crate::error::{domain, shape, Error, Result};

/// Tolerance under which a vertex counts as redundant during reduction.
pub const REDUCE_TOL: f64 = 1e-9;
/// ∞-norm distance under which two points are merged.
pub const DEDUP_TOL: f64 = 1e-8;
/// Feasibility slack for enumerated vertices.
pub const ENUM_FEASIBILITY_TOL: f64 = 1e-9;
pub const DEFAULT_DIM_CAP: usize = 10;
/// Largest number of inequality subsets vertex enumeration will try.
pub const MAX_ENUM_SUBSETS: u128 = 2_000_000;

/// Convex hull of a finite point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VPolytopeJson")]
pub struct VPolytope {
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct VPolytopeJson {
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<VPolytopeJson> for VPolytope {
    type Error = Error;

    fn try_from(j: VPolytopeJson) -> Result<Self> {
        VPolytope::new(j.ambient_dim, j.vertices)
    }
}

impl VPolytope {
    pub fn new(ambient_dim: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(domain("polytope needs at least one vertex"));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != ambient_dim) {
            return Err(shape(format!(
                "vertex of length {} in ambient dimension {ambient_dim}",
                v.len()
            )));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(domain("vertex coordinates must be finite"));
        }
        Ok(VPolytope { ambient_dim, vertices })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// `normal · x ≥ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// `normal · x = value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub value: f64,
}

/// Polyhedron given by inequalities and equalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub ambient_dim: usize,
    pub inequalities: Vec<Halfspace>,
    pub equalities: Vec<Hyperplane>,
}

impl HPolytope {
    pub fn new(ambient_dim: usize, inequalities: Vec<Halfspace>, equalities: Vec<Hyperplane>) -> Result<Self> {
        if inequalities.is_empty() && equalities.is_empty() {
            return Err(domain("H-polytope needs at least one constraint"));
        }
        let lens = inequalities
            .iter()
            .map(|h| h.normal.len())
            .chain(equalities.iter().map(|h| h.normal.len()));
        for len in lens {
            if len != ambient_dim {
                return Err(shape(format!(
                    "constraint of length {len} in ambient dimension {ambient_dim}"
                )));
            }
        }
        Ok(HPolytope {
            ambient_dim,
            inequalities,
            equalities,
        })
    }

    /// Largest constraint violation at `x` (0 when every constraint holds).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.ambient_dim {
            return Err(shape(format!(
                "point of length {} in ambient dimension {}",
                x.len(),
                self.ambient_dim
            )));
        }
        let ineq = self
            .inequalities
            .iter()
            .map(|h| (h.offset - dot(&h.normal, x)).max(0.0));
        let eq = self.equalities.iter().map(|h| (dot(&h.normal, x) - h.value).abs());
        Ok(ineq.chain(eq).fold(0.0, f64::max))
    }

    /// True iff inequalities hold to within `-tol` and equalities to within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.max_violation(x)? <= tol)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Hyperplane separating a point from a polytope:
/// `normal · v ≤ offset` on every vertex and `normal · x = offset + margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub margin: f64,
}

impl Separation {
    /// Re-evaluates the certificate against `p` and `x`; returns the margin
    /// if every vertex lies on the near side.
    pub fn verify(&self, x: &[f64], p: &VPolytope) -> Option<f64> {
        let max_v = p
            .vertices
            .iter()
            .map(|v| dot(&self.normal, v))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_v > self.offset + 1e-12 {
            return None;
        }
        Some(dot(&self.normal, x) - self.offset)
    }
}

/// Best convex-combination fit of a point by a polytope's vertices.
#[derive(Debug, Clone)]
pub struct HullFit {
    /// Convex weights, one per vertex.
    pub weights: Vec<f64>,
    /// `‖Σ wᵢvᵢ − x‖_∞` recomputed from `weights`.
    pub residual: f64,
    /// Present when the point lies strictly outside the hull.
    pub separation: Option<Separation>,
}

/// Coordinates that matter to the ∞-norm fit: those not constant across the
/// vertices and `x`, with duplicates up to sign dropped.
fn active_coordinates(x: &[f64], p: &VPolytope) -> Vec<usize> {
    let column = |k: usize| std::iter::once(x[k]).chain(p.vertices.iter().map(move |v| v[k]));
    let mut kept: Vec<usize> = Vec::new();
    for k in 0..x.len() {
        if column(k).all(|c| c == x[k]) {
            continue;
        }
        let dup = kept
            .iter()
            .any(|&j| column(j).zip(column(k)).all(|(a, b)| a == b) || column(j).zip(column(k)).all(|(a, b)| a == -b));
        if !dup {
            kept.push(k);
        }
    }
    kept
}

/// Solves `min t` over convex weights `λ` with `|Σ λᵢvᵢ − x|_k ≤ t` for
/// every coordinate `k`.
pub fn hull_fit(x: &[f64], p: &VPolytope) -> Result<HullFit> {
    if x.len() != p.ambient_dim {
        return Err(shape(format!(
            "point of length {} against polytope in dimension {}",
            x.len(),
            p.ambient_dim
        )));
    }
    let coords = active_coordinates(x, p);
    let d = coords.len();
    let n = p.vertices.len();
    // Columns: λ (n), t, lower slacks (d), upper slacks (d).
    let cols = n + 1 + 2 * d;
    let mut a = Vec::with_capacity(2 * d + 1);
    let mut b = Vec::with_capacity(2 * d + 1);
    for (r, &k) in coords.iter().enumerate() {
        // Σ λᵢ vᵢₖ + t − sₖ = xₖ
        let mut row = vec![0.0; cols];
        for (i, v) in p.vertices.iter().enumerate() {
            row[i] = v[k];
        }
        row[n] = 1.0;
        row[n + 1 + r] = -1.0;
        a.push(row);
        b.push(x[k]);
    }
    for (r, &k) in coords.iter().enumerate() {
        // Σ λᵢ vᵢₖ − t + sₖ' = xₖ
        let mut row = vec![0.0; cols];
        for (i, v) in p.vertices.iter().enumerate() {
            row[i] = v[k];
        }
        row[n] = -1.0;
        row[n + 1 + d + r] = 1.0;
        a.push(row);
        b.push(x[k]);
    }
    let mut row = vec![0.0; cols];
    for v in &mut row[..n] {
        *v = 1.0;
    }
    a.push(row);
    b.push(1.0);
    let mut c = vec![0.0; cols];
    c[n] = 1.0;

    let sol = match LinearProgram::new(a, b, c)?.solve()? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(Error::Numerical("hull residual program reported infeasible".into())),
        LpOutcome::Unbounded => return Err(Error::Numerical("hull residual program reported unbounded".into())),
    };

    let mut weights: Vec<f64> = sol.x[..n].iter().map(|w| w.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in &mut weights {
            *w /= total;
        }
    }
    let mut recon = vec![0.0; p.ambient_dim];
    for (w, v) in weights.iter().zip(&p.vertices) {
        for (r, vk) in recon.iter_mut().zip(v) {
            *r += w * vk;
        }
    }
    let residual = inf_distance(&recon, x);

    let separation = if sol.objective > 0.0 {
        // Dual rows: yₖ (lower), y'ₖ (upper), μ (normalization). The functional
        // w = y + y' satisfies w·vᵢ ≤ −μ for all i and w·x = t* − μ.
        let mut normal = vec![0.0; p.ambient_dim];
        for (r, &k) in coords.iter().enumerate() {
            normal[k] = sol.duals[r] + sol.duals[d + r];
        }
        let offset = p
            .vertices
            .iter()
            .map(|v| dot(&normal, v))
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = dot(&normal, x) - offset;
        (margin > 0.0).then_some(Separation { normal, offset, margin })
    } else {
        None
    };
    Ok(HullFit {
        weights,
        residual,
        separation,
    })
}

/// Minimal ∞-norm distance from `x` to the hull of `p`.
pub fn hull_residual(x: &[f64], p: &VPolytope) -> Result<f64> {
    Ok(hull_fit(x, p)?.residual)
}

/// True iff some convex combination of the vertices is within `tol` of `x`
/// in the ∞-norm.
pub fn hull_membership(x: &[f64], p: &VPolytope, tol: f64) -> Result<bool> {
    Ok(hull_residual(x, p)? <= tol)
}

/// Deduplicates and drops every vertex lying in the hull of the others.
pub fn reduce_vertices(p: &VPolytope) -> VPolytope {
    let vertices = reduce_indices(p).into_iter().map(|i| p.vertices[i].clone()).collect();
    VPolytope {
        ambient_dim: p.ambient_dim,
        vertices,
    }
}

/// Indices of the vertices [`reduce_vertices`] keeps, in input order.
pub fn reduce_indices(p: &VPolytope) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::with_capacity(p.vertices.len());
    for (i, v) in p.vertices.iter().enumerate() {
        if !kept.iter().any(|&k| inf_distance(&p.vertices[k], v) <= DEDUP_TOL) {
            kept.push(i);
        }
    }
    let mut pos = 0;
    while pos < kept.len() && kept.len() > 1 {
        let others = kept
            .iter()
            .filter(|&&k| k != kept[pos])
            .map(|&k| p.vertices[k].clone())
            .collect();
        let rest = VPolytope {
            ambient_dim: p.ambient_dim,
            vertices: others,
        };
        // An LP failure here leaves the vertex in place; that is always safe.
        if hull_membership(&p.vertices[kept[pos]], &rest, REDUCE_TOL).unwrap_or(false) {
            kept.remove(pos);
        } else {
            pos += 1;
        }
    }
    kept
}

/// Largest hull residual of any vertex of one polytope against the other.
pub fn polytope_distance(p: &VPolytope, q: &VPolytope) -> Result<f64> {
    if p.ambient_dim != q.ambient_dim {
        return Err(shape(format!(
            "comparing polytopes in dimensions {} and {}",
            p.ambient_dim, q.ambient_dim
        )));
    }
    let mut worst: f64 = 0.0;
    for v in &p.vertices {
        worst = worst.max(hull_residual(v, q)?);
    }
    for v in &q.vertices {
        worst = worst.max(hull_residual(v, p)?);
    }
    Ok(worst)
}

/// True iff each polytope's vertices lie in the other's hull within `tol`.
pub fn polytope_equal(p: &VPolytope, q: &VPolytope, tol: f64) -> Result<bool> {
    if p.ambient_dim != q.ambient_dim {
        return Err(shape(format!(
            "comparing polytopes in dimensions {} and {}",
            p.ambient_dim, q.ambient_dim
        )));
    }
    for v in &p.vertices {
        if !hull_membership(v, q, tol)? {
            return Ok(false);
        }
    }
    for v in &q.vertices {
        if !hull_membership(v, p, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Basic feasible points of `h`: every equality plus each choice of
/// `ambient_dim − #equalities` inequalities, tight, solved as a square
/// system. Results are deduplicated in a canonical order and reduced.
pub fn enumerate_vertices(h: &HPolytope, dim_cap: usize) -> Result<VPolytope> {
    let d = h.ambient_dim;
    if d > dim_cap {
        return Err(Error::Unsupported(format!(
            "vertex enumeration in dimension {d} exceeds the cap of {dim_cap}"
        )));
    }
    let n_eq = h.equalities.len();
    if n_eq > d {
        return Err(domain("more equalities than dimensions"));
    }
    let choose = d - n_eq;
    let subsets = binomial(h.inequalities.len(), choose);
    if subsets > MAX_ENUM_SUBSETS {
        return Err(Error::Unsupported(format!(
            "vertex enumeration would visit {subsets} inequality subsets, above the cap of {MAX_ENUM_SUBSETS}"
        )));
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for subset in Combinations::new(h.inequalities.len(), choose) {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut rhs: Vec<f64> = Vec::with_capacity(d);
        for e in &h.equalities {
            rows.push(e.normal.clone());
            rhs.push(e.value);
        }
        for &i in &subset {
            rows.push(h.inequalities[i].normal.clone());
            rhs.push(h.inequalities[i].offset);
        }
        if let Some(x) = solve_square(rows, rhs) {
            if h.max_violation(&x)? <= ENUM_FEASIBILITY_TOL {
                found.push(x);
            }
        }
    }
    if found.is_empty() {
        return Err(domain("H-polytope has no vertices (empty or unbounded)"));
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for x in found {
        if !unique.iter().any(|u| inf_distance(u, &x) <= DEDUP_TOL) {
            unique.push(x);
        }
    }
    Ok(reduce_vertices(&VPolytope {
        ambient_dim: d,
        vertices: unique,
    }))
}

/// `C(n, k)`, saturating.
fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in (i + 1)..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
