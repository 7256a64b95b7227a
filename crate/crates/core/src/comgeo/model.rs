//! Polytopic convex operational models and their composites.
//!
//! States of a model are real coordinate vectors; effects are linear
//! functionals on the same coordinates, so affine effects such as `1 − x` are
//! written with the help of a constant coordinate. A composite state is a
//! bilinear functional `φ(a, b) = aᵀ W b`, stored through its coefficient
//! matrix `W`. Flattening `W` row-major gives the coordinates in which the
//! minimal and maximal tensor products live.

use serde::{Deserialize, Serialize};

use super::polytope::{
    dot, enumerate_vertices, hull_membership, reduce_vertices, HPolytope, Halfspace, Hyperplane, VPolytope,
};
use crate::error::{domain, shape, Error, Result};

pub const MODEL_TOL: f64 = 1e-10;
/// Tolerance used when a composite state must lie in the maximal tensor product.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Finite-dimensional convex operational model with a polytopic state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct ComModel {
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
    effects: Vec<Vec<f64>>,
    unit: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
    effects: Vec<Vec<f64>>,
    unit: Vec<f64>,
}

impl TryFrom<ModelJson> for ComModel {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        ComModel::new(j.ambient_dim, j.vertices, j.effects, j.unit)
    }
}

impl From<ComModel> for ModelJson {
    fn from(m: ComModel) -> Self {
        ModelJson {
            ambient_dim: m.ambient_dim,
            vertices: m.vertices,
            effects: m.effects,
            unit: m.unit,
        }
    }
}

impl ComModel {
    /// Checks normalization, effect bounds and irredundancy of the vertices.
    pub fn new(ambient_dim: usize, vertices: Vec<Vec<f64>>, effects: Vec<Vec<f64>>, unit: Vec<f64>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(domain("ambient dimension must be positive"));
        }
        if effects.is_empty() {
            return Err(domain("model needs at least one effect"));
        }
        if unit.len() != ambient_dim {
            return Err(shape(format!(
                "unit has length {} in dimension {ambient_dim}",
                unit.len()
            )));
        }
        if let Some(e) = effects.iter().find(|e| e.len() != ambient_dim) {
            return Err(shape(format!(
                "effect of length {} in dimension {ambient_dim}",
                e.len()
            )));
        }
        let poly = VPolytope::new(ambient_dim, vertices)?;
        for v in poly.vertices() {
            let u = dot(&unit, v);
            if (u - 1.0).abs() > MODEL_TOL {
                return Err(domain(format!("unit evaluates to {u} on vertex {v:?}")));
            }
            for e in &effects {
                let p = dot(e, v);
                if p < -MODEL_TOL || p > 1.0 + MODEL_TOL {
                    return Err(domain(format!("effect {e:?} gives {p} on vertex {v:?}")));
                }
            }
        }
        if reduce_vertices(&poly).len() != poly.len() {
            return Err(domain("vertex list is redundant"));
        }
        Ok(ComModel {
            ambient_dim,
            vertices: poly.vertices().to_vec(),
            effects,
            unit,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn effects(&self) -> &[Vec<f64>] {
        &self.effects
    }

    pub fn unit(&self) -> &[f64] {
        &self.unit
    }

    pub fn state_space(&self) -> VPolytope {
        VPolytope::new(self.ambient_dim, self.vertices.clone()).expect("validated at construction")
    }

    /// Extreme effects followed by the unit: the index set of bilinear tables.
    pub fn spanning_effects(&self) -> Vec<Vec<f64>> {
        let mut s = self.effects.clone();
        s.push(self.unit.clone());
        s
    }

    /// True iff `x` is in the state space within `tol`.
    pub fn contains_state(&self, x: &[f64], tol: f64) -> Result<bool> {
        hull_membership(x, &self.state_space(), tol)
    }
}

/// Classical system with `n` outcomes: the standard simplex.
pub fn classical_model(n: usize) -> Result<ComModel> {
    if n < 2 {
        return Err(domain(format!("classical model needs at least 2 outcomes, got {n}")));
    }
    let basis = |i: usize| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let vertices: Vec<Vec<f64>> = (0..n).map(basis).collect();
    let mut effects: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let e = basis(i);
        let complement: Vec<f64> = e.iter().map(|x| 1.0 - x).collect();
        for f in [e, complement] {
            if !effects.contains(&f) {
                effects.push(f);
            }
        }
    }
    ComModel::new(n, vertices, effects, vec![1.0; n])
}

/// Single gbit: the square of states `(x, y, 1)` with two binary
/// measurements, `x` and `y`.
pub fn gbit_model() -> ComModel {
    let vertices = vec![
        vec![0.0, 0.0, 1.0],
        vec![1.0, 0.0, 1.0],
        vec![0.0, 1.0, 1.0],
        vec![1.0, 1.0, 1.0],
    ];
    let effects = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 1.0],
    ];
    ComModel::new(3, vertices, effects, vec![0.0, 0.0, 1.0]).expect("gbit model is well formed")
}

/// Bilinear functional `φ(a, b) = aᵀ W b` on a pair of models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearState {
    dim_a: usize,
    dim_b: usize,
    /// Row-major `dim_a x dim_b` coefficient matrix `W`.
    coeffs: Vec<f64>,
}

impl BilinearState {
    pub fn from_coeffs(dim_a: usize, dim_b: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dim_a * dim_b {
            return Err(shape(format!(
                "{} coefficients for a {dim_a}x{dim_b} bilinear form",
                coeffs.len()
            )));
        }
        Ok(BilinearState { dim_a, dim_b, coeffs })
    }

    /// `vᵃ ⊗ vᵇ`.
    pub fn product(va: &[f64], vb: &[f64]) -> Self {
        let coeffs = va.iter().flat_map(|a| vb.iter().map(move |b| a * b)).collect();
        BilinearState {
            dim_a: va.len(),
            dim_b: vb.len(),
            coeffs,
        }
    }

    /// Reads a flattened coordinate vector for the pair `(a, b)`.
    pub fn from_coords(a: &ComModel, b: &ComModel, coords: &[f64]) -> Result<Self> {
        Self::from_coeffs(a.ambient_dim, b.ambient_dim, coords.to_vec())
    }

    /// Fits `W` to a table of values `φ(sᵢ, tⱼ)` over the spanning effect
    /// sets of `a` and `b` (extreme effects, then the unit). Fails if the
    /// effects do not span the dual space or the table is not bilinear.
    pub fn from_table(table: &[Vec<f64>], a: &ComModel, b: &ComModel) -> Result<Self> {
        let sa = a.spanning_effects();
        let sb = b.spanning_effects();
        if table.len() != sa.len() || table.iter().any(|r| r.len() != sb.len()) {
            return Err(shape(format!("table must be {}x{}", sa.len(), sb.len())));
        }
        // W = (SaᵀSa)⁻¹ Saᵀ T Sb (SbᵀSb)⁻¹
        let left = pseudo_inverse_rows(&sa, a.ambient_dim)?;
        let right = pseudo_inverse_rows(&sb, b.ambient_dim)?;
        let (da, db) = (a.ambient_dim, b.ambient_dim);
        let mut coeffs = vec![0.0; da * db];
        for k in 0..da {
            for l in 0..db {
                let mut s = 0.0;
                for (i, row) in table.iter().enumerate() {
                    for (j, t) in row.iter().enumerate() {
                        s += left[k][i] * t * right[l][j];
                    }
                }
                coeffs[k * db + l] = s;
            }
        }
        let state = BilinearState {
            dim_a: da,
            dim_b: db,
            coeffs,
        };
        let refit = state.table(a, b)?;
        let err = refit
            .iter()
            .flatten()
            .zip(table.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if err > 1e-9 {
            return Err(domain(format!("table is not bilinear in the effects (misfit {err:e})")));
        }
        Ok(state)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        BilinearState {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            coeffs: self.coeffs.iter().map(|x| x * s).collect(),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, ak) in a.iter().enumerate() {
            for (l, bl) in b.iter().enumerate() {
                s += ak * self.coeffs[k * self.dim_b + l] * bl;
            }
        }
        s
    }

    /// Values on the spanning effect sets, unit row and column last.
    pub fn table(&self, a: &ComModel, b: &ComModel) -> Result<Vec<Vec<f64>>> {
        self.check_models(a, b)?;
        let sb = b.spanning_effects();
        Ok(a.spanning_effects()
            .iter()
            .map(|ea| sb.iter().map(|eb| self.eval(ea, eb)).collect())
            .collect())
    }

    /// `φ(u_A, u_B)`.
    pub fn normalization(&self, a: &ComModel, b: &ComModel) -> Result<f64> {
        self.check_models(a, b)?;
        Ok(self.eval(&a.unit, &b.unit))
    }

    fn check_models(&self, a: &ComModel, b: &ComModel) -> Result<()> {
        if self.dim_a != a.ambient_dim || self.dim_b != b.ambient_dim {
            return Err(shape(format!(
                "bilinear state is {}x{} but models are {}x{}",
                self.dim_a, self.dim_b, a.ambient_dim, b.ambient_dim
            )));
        }
        Ok(())
    }
}

/// Rows of `(SᵀS)⁻¹ Sᵀ` for the effect matrix `S` (one effect per row).
fn pseudo_inverse_rows(s: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut gram = vec![vec![0.0; dim]; dim];
    for row in s {
        for i in 0..dim {
            for j in 0..dim {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert(gram).ok_or_else(|| domain("effects do not span the dual space"))?;
    Ok((0..dim)
        .map(|k| s.iter().map(|row| dot(&inv[k], row)).collect())
        .collect())
}

fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for k in 0..n {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..n {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Ω_A ⊗_min Ω_B: hull of all products of extreme states.
pub fn min_tensor(a: &ComModel, b: &ComModel) -> VPolytope {
    let mut verts = Vec::with_capacity(a.vertices.len() * b.vertices.len());
    for va in &a.vertices {
        for vb in &b.vertices {
            verts.push(BilinearState::product(va, vb).coeffs);
        }
    }
    reduce_vertices(&VPolytope::new(a.ambient_dim * b.ambient_dim, verts).expect("nonempty product"))
}

/// Ω_A ⊗_max Ω_B: `φ(eᵢ, fⱼ) ≥ 0` for every pair of extreme effects and
/// `φ(u_A, u_B) = 1`.
pub fn max_tensor_constraints(a: &ComModel, b: &ComModel) -> HPolytope {
    let dim = a.ambient_dim * b.ambient_dim;
    let mut inequalities = Vec::with_capacity(a.effects.len() * b.effects.len());
    for ea in &a.effects {
        for eb in &b.effects {
            inequalities.push(Halfspace {
                normal: BilinearState::product(ea, eb).coeffs,
                offset: 0.0,
            });
        }
    }
    let equalities = vec![Hyperplane {
        normal: BilinearState::product(&a.unit, &b.unit).coeffs,
        value: 1.0,
    }];
    HPolytope::new(dim, inequalities, equalities).expect("constraint lengths match by construction")
}

pub fn max_tensor_membership(phi: &BilinearState, h: &HPolytope, tol: f64) -> Result<bool> {
    h.contains(&phi.coeffs, tol)
}

/// Extreme points of Ω_max, for `dim_a · dim_b ≤ dim_cap`.
pub fn enumerate_max_vertices(h: &HPolytope, dim_cap: usize) -> Result<VPolytope> {
    enumerate_vertices(h, dim_cap)
}

/// `(ω_A, ω_B)` with `ω_A(a) = φ(a, u_B)` and `ω_B(b) = φ(u_A, b)`, in model coordinates.
pub fn gpt_marginals(phi: &BilinearState, a: &ComModel, b: &ComModel) -> Result<(Vec<f64>, Vec<f64>)> {
    phi.check_models(a, b)?;
    let h = max_tensor_constraints(a, b);
    let violation = h.max_violation(&phi.coeffs)?;
    if violation > MEMBERSHIP_TOL {
        return Err(domain(format!(
            "state is outside the maximal tensor product (violation {violation:e})"
        )));
    }
    Ok(marginals_unchecked(phi, a, b))
}

pub(crate) fn marginals_unchecked(phi: &BilinearState, a: &ComModel, b: &ComModel) -> (Vec<f64>, Vec<f64>) {
    let (da, db) = phi.dims();
    let wa = (0..da)
        .map(|k| (0..db).map(|l| phi.coeffs[k * db + l] * b.unit[l]).sum())
        .collect();
    let wb = (0..db)
        .map(|l| (0..da).map(|k| phi.coeffs[k * db + l] * a.unit[k]).sum())
        .collect();
    (wa, wb)
}

/// Popescu-Rohrlich box on two gbits: uniform marginals, outcomes equal for
/// the measurement pairs (x,x), (x,y), (y,x) and opposite for (y,y).
pub fn pr_box() -> BilinearState {
    let g = gbit_model();
    // Spanning effects per side: [x, 1−x, y, 1−y, u]; (measurement, outcome).
    let labels = [(0usize, 1u8), (0, 0), (1, 1), (1, 0)];
    let mut table = vec![vec![0.0; 5]; 5];
    for (i, &(sa, oa)) in labels.iter().enumerate() {
        for (j, &(sb, ob)) in labels.iter().enumerate() {
            let anti = sa == 1 && sb == 1;
            table[i][j] = if (oa == ob) != anti { 0.5 } else { 0.0 };
        }
        table[i][4] = 0.5;
        table[4][i] = 0.5;
    }
    table[4][4] = 1.0;
    BilinearState::from_table(&table, &g, &g).expect("PR box table is bilinear")
}
