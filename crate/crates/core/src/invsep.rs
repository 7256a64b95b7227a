//! Separability as informational invariance.
//!
//! A convex set of composite states is pushed down to its pair of marginal
//! sets (`tau`) and lifted back by taking all products and mixing
//! (`lambda_map`). Sets that survive the round trip unchanged are convex
//! separable subsets; singletons that survive are product states, and the
//! gap `Π(ρ) − ρ` feeds the correlation measures in [`g_measure`].
//!
//! Two backends share the same convex machinery from [`crate::comgeo`]:
//! quantum polytopes, whose vertices are density matrices flattened to real
//! coordinates (real and imaginary parts interleaved), and polytopes of
//! bilinear states over a pair of polytopic models.

use serde::{Deserialize, Serialize};

use crate::comgeo::{
    classical_model, hull_fit, hull_residual, marginals_unchecked, max_tensor_constraints, min_tensor,
    polytope_distance, polytope_equal, reduce_indices, BilinearState, ComModel, HullFit, VPolytope, MEMBERSHIP_TOL,
};
use crate::error::{domain, shape, Error, Result};
use crate::matcore::{hermitian_eig, norm, partial_transpose, ComplexMatrix, DimSplit, NormKind, Subsystem};
use crate::qstate::{marginals, pi_map, DensityMatrix, State};

/// Default tolerance for polytope equality in the CSS test.
pub const CSS_TOL: f64 = 1e-8;
/// Below this the partial transpose counts as having a negative eigenvalue.
pub const PPT_TOL: f64 = 1e-10;

/// Finite set of density matrices on a common split, standing for its hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeJson", into = "PolytopeJson")]
pub struct QuantumPolytope {
    vertices: Vec<DensityMatrix>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    vertices: Vec<State>,
}

impl TryFrom<PolytopeJson> for QuantumPolytope {
    type Error = Error;

    fn try_from(j: PolytopeJson) -> Result<Self> {
        QuantumPolytope::new(j.vertices.iter().map(State::to_density).collect())
    }
}

impl From<QuantumPolytope> for PolytopeJson {
    fn from(p: QuantumPolytope) -> Self {
        PolytopeJson {
            vertices: p.vertices.into_iter().map(State::Density).collect(),
        }
    }
}

impl QuantumPolytope {
    pub fn new(vertices: Vec<DensityMatrix>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| domain("state polytope needs at least one vertex"))?;
        let split = first.split();
        if let Some(v) = vertices.iter().find(|v| v.split() != split) {
            return Err(shape(format!(
                "vertex with split {} in a polytope over {split}",
                v.split()
            )));
        }
        Ok(QuantumPolytope { vertices })
    }

    pub fn singleton(rho: DensityMatrix) -> Self {
        QuantumPolytope { vertices: vec![rho] }
    }

    pub fn vertices(&self) -> &[DensityMatrix] {
        &self.vertices
    }

    pub fn split(&self) -> DimSplit {
        self.vertices[0].split()
    }

    /// Vertices as real coordinate vectors.
    pub fn to_vpolytope(&self) -> VPolytope {
        let d = 2 * self.split().total().pow(2);
        VPolytope::new(d, self.vertices.iter().map(|v| v.matrix().to_real_coords()).collect())
            .expect("uniform dimensions checked at construction")
    }

    /// Drops duplicate and non-extreme vertices.
    pub fn reduced(&self) -> Self {
        let keep = reduce_indices(&self.to_vpolytope());
        QuantumPolytope {
            vertices: keep.into_iter().map(|i| self.vertices[i].clone()).collect(),
        }
    }

    /// Hull membership of `rho` with its best convex fit.
    pub fn fit(&self, rho: &DensityMatrix) -> Result<HullFit> {
        if rho.split() != self.split() {
            return Err(shape(format!(
                "state over {} tested against polytope over {}",
                rho.split(),
                self.split()
            )));
        }
        hull_fit(&rho.matrix().to_real_coords(), &self.to_vpolytope())
    }

    pub fn contains(&self, rho: &DensityMatrix, tol: f64) -> Result<bool> {
        Ok(self.fit(rho)?.residual <= tol)
    }
}

/// Hulls of the vertexwise marginals: `(tr_B(C), tr_A(C))`.
pub fn tau(c: &QuantumPolytope) -> (QuantumPolytope, QuantumPolytope) {
    let (a, b): (Vec<_>, Vec<_>) = c.vertices.iter().map(marginals).unzip();
    (
        QuantumPolytope { vertices: a }.reduced(),
        QuantumPolytope { vertices: b }.reduced(),
    )
}

/// `Conv(C₁ ⊗ C₂)`: all pairwise products of vertices, reduced.
pub fn lambda_map(c1: &QuantumPolytope, c2: &QuantumPolytope) -> Result<QuantumPolytope> {
    for (name, c) in [("first", c1), ("second", c2)] {
        if c.split().dim_b != 1 {
            return Err(shape(format!(
                "{name} factor polytope must hold single-system states, found split {}",
                c.split()
            )));
        }
    }
    let mut vertices = Vec::with_capacity(c1.vertices.len() * c2.vertices.len());
    for a in &c1.vertices {
        for b in &c2.vertices {
            vertices.push(DensityMatrix::tensor(a, b));
        }
    }
    Ok(QuantumPolytope { vertices }.reduced())
}

/// `Λ ∘ τ`, keeping the split of `c`.
pub fn lambda_tau(c: &QuantumPolytope) -> QuantumPolytope {
    let (c1, c2) = tau(c);
    let lifted = lambda_map(&c1, &c2).expect("tau yields single-system factors");
    let split = c.split();
    QuantumPolytope {
        vertices: lifted
            .vertices
            .into_iter()
            .map(|v| v.with_split(split).expect("product dimension matches"))
            .collect(),
    }
}

/// Largest hull residual between `C` and `Λ∘τ(C)` in either direction.
pub fn css_distance(c: &QuantumPolytope) -> Result<f64> {
    polytope_distance(&lambda_tau(c).to_vpolytope(), &c.to_vpolytope())
}

/// True iff `Λ∘τ(C) = C` up to `tol`.
pub fn is_css(c: &QuantumPolytope, tol: f64) -> Result<bool> {
    polytope_equal(&lambda_tau(c).to_vpolytope(), &c.to_vpolytope(), tol)
}

/// One term `p · a ⊗ b` of a separable decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    pub p: f64,
    #[serde(with = "single_state")]
    pub a: DensityMatrix,
    #[serde(with = "single_state")]
    pub b: DensityMatrix,
}

/// `Σ pᵢ aᵢ ⊗ bᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionJson")]
pub struct Decomposition {
    terms: Vec<DecompositionTerm>,
}

#[derive(Deserialize)]
struct DecompositionJson {
    terms: Vec<DecompositionTerm>,
}

impl TryFrom<DecompositionJson> for Decomposition {
    type Error = Error;

    fn try_from(j: DecompositionJson) -> Result<Self> {
        Decomposition::new(j.terms)
    }
}

mod single_state {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::qstate::{DensityMatrix, State};

    pub fn serialize<S: Serializer>(rho: &DensityMatrix, s: S) -> Result<S::Ok, S::Error> {
        rho.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DensityMatrix, D::Error> {
        Ok(State::deserialize(d)?.to_density())
    }
}

impl Decomposition {
    pub fn new(terms: Vec<DecompositionTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| domain("decomposition needs at least one term"))?;
        let (da, db) = (first.a.dim(), first.b.dim());
        let mut total = 0.0;
        for t in &terms {
            if !(t.p >= 0.0) {
                return Err(domain(format!("negative weight {}", t.p)));
            }
            if t.a.dim() != da || t.b.dim() != db {
                return Err(shape("all terms must share factor dimensions"));
            }
            total += t.p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Decomposition { terms })
    }

    pub fn terms(&self) -> &[DecompositionTerm] {
        &self.terms
    }

    pub fn split(&self) -> DimSplit {
        DimSplit {
            dim_a: self.terms[0].a.dim(),
            dim_b: self.terms[0].b.dim(),
        }
    }

    /// The decomposed state.
    pub fn state(&self) -> DensityMatrix {
        let products: Vec<DensityMatrix> = self.terms.iter().map(|t| DensityMatrix::tensor(&t.a, &t.b)).collect();
        let weighted: Vec<(f64, &DensityMatrix)> = self.terms.iter().map(|t| t.p).zip(&products).collect();
        DensityMatrix::mixture(&weighted).expect("weights validated at construction")
    }
}

/// Witness polytope `Conv{aᵢ ⊗ bⱼ}` over all index pairs; it contains the
/// decomposed state and is invariant under `Λ∘τ`.
pub fn css_from_decomposition(d: &Decomposition) -> QuantumPolytope {
    let split = d.split();
    let mut vertices = Vec::with_capacity(d.terms.len().pow(2));
    for ti in &d.terms {
        for tj in &d.terms {
            vertices.push(
                DensityMatrix::tensor(&ti.a, &tj.b)
                    .with_split(split)
                    .expect("dimensions match"),
            );
        }
    }
    QuantumPolytope { vertices }.reduced()
}

/// `‖Π(ρ) − ρ‖_F ≤ tol`.
pub fn is_product(rho: &DensityMatrix, tol: f64) -> bool {
    (pi_map(rho).matrix() - rho.matrix()).frobenius() <= tol
}

/// Smallest eigenvalue of the partial transpose on `B`.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let pt = partial_transpose(rho.matrix(), rho.split(), Subsystem::B).expect("split checked at construction");
    hermitian_eig(&pt)
        .expect("partial transpose of a Hermitian matrix is Hermitian")
        .min()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PptVerdict {
    Separable,
    Entangled,
    Inconclusive,
}

impl PptVerdict {
    pub fn name(self) -> &'static str {
        match self {
            PptVerdict::Separable => "separable",
            PptVerdict::Entangled => "entangled",
            PptVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Splits on which a positive partial transpose implies separability.
pub fn ppt_is_conclusive(split: DimSplit) -> bool {
    let (a, b) = (split.dim_a.min(split.dim_b), split.dim_a.max(split.dim_b));
    a == 1 || (a == 2 && b <= 3)
}

pub fn ppt_verdict(rho: &DensityMatrix) -> PptVerdict {
    if ppt_min_eigenvalue(rho) < -PPT_TOL {
        PptVerdict::Entangled
    } else if ppt_is_conclusive(rho.split()) {
        PptVerdict::Separable
    } else {
        PptVerdict::Inconclusive
    }
}

/// The function applied to `Π(ρ) − ρ` before the norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FKind {
    Identity,
    /// Entrywise modulus.
    Abs,
    /// `Δ†Δ`.
    Square,
}

impl FKind {
    pub const ALL: [FKind; 3] = [FKind::Identity, FKind::Abs, FKind::Square];

    pub fn name(self) -> &'static str {
        match self {
            FKind::Identity => "identity",
            FKind::Abs => "abs",
            FKind::Square => "square",
        }
    }

    pub fn apply(self, delta: &ComplexMatrix) -> ComplexMatrix {
        match self {
            FKind::Identity => delta.clone(),
            FKind::Abs => delta.map(|z| num_complex::Complex64::new(z.norm(), 0.0)),
            FKind::Square => &delta.adjoint() * delta,
        }
    }
}

impl std::str::FromStr for FKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| domain(format!("unknown F kind '{s}' (expected identity, abs or square)")))
    }
}

/// The up-map applied after the marginal map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// Product of the marginals.
    #[default]
    LambdaTilde,
}

/// The marginal map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    #[default]
    PartialTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub f_kind: FKind,
    pub norm_kind: NormKind,
    #[serde(default)]
    pub psi_kind: PsiKind,
    #[serde(default)]
    pub phi_kind: PhiKind,
}

impl MeasureConfig {
    pub fn new(f_kind: FKind, norm_kind: NormKind) -> Self {
        MeasureConfig {
            f_kind,
            norm_kind,
            psi_kind: PsiKind::LambdaTilde,
            phi_kind: PhiKind::PartialTrace,
        }
    }

    /// Every `(F, norm)` pair.
    pub fn all() -> impl Iterator<Item = MeasureConfig> {
        FKind::ALL
            .into_iter()
            .flat_map(|f| NormKind::ALL.into_iter().map(move |n| MeasureConfig::new(f, n)))
    }
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig::new(FKind::Identity, NormKind::Frobenius)
    }
}

/// `‖F(Π(ρ) − ρ)‖`.
pub fn g_measure(rho: &DensityMatrix, cfg: MeasureConfig) -> f64 {
    let PsiKind::LambdaTilde = cfg.psi_kind;
    let PhiKind::PartialTrace = cfg.phi_kind;
    let delta = pi_map(rho).matrix() - rho.matrix();
    norm(&cfg.f_kind.apply(&delta), cfg.norm_kind).expect("square Hermitian operand")
}

/// Model-side analogue of [`g_measure`]: the norm of `F(ω_A ⊗ ω_B − ω)`
/// with the coefficient matrix of the bilinear form as the operand.
pub fn gpt_g_measure(phi: &BilinearState, a: &ComModel, b: &ComModel, cfg: MeasureConfig) -> Result<f64> {
    let (wa, wb) = crate::comgeo::gpt_marginals(phi, a, b)?;
    let prod = BilinearState::product(&wa, &wb);
    let (da, db) = phi.dims();
    let delta: Vec<f64> = prod.coords().iter().zip(phi.coords()).map(|(x, y)| x - y).collect();
    let m = ComplexMatrix::from_real(da, db, &delta)?;
    let operand = cfg.f_kind.apply(&m);
    if cfg.norm_kind == NormKind::Trace && !operand.is_square() {
        // Sum of singular values.
        let gram = &operand.adjoint() * &operand;
        return Ok(hermitian_eig(&gram)?.values.iter().map(|x| x.max(0.0).sqrt()).sum());
    }
    norm(&operand, cfg.norm_kind)
}

/// Membership of `σ` in `φ₁⁻¹(C₁) ∩ φ₂⁻¹(C₂)`: both marginals lie in the
/// given factor hulls.
pub fn psi_preimage_member(
    sigma: &DensityMatrix,
    c1: &QuantumPolytope,
    c2: &QuantumPolytope,
    tol: f64,
) -> Result<bool> {
    let (a, b) = marginals(sigma);
    Ok(c1.contains(&a, tol)? && c2.contains(&b, tol)?)
}

/// Polytope of bilinear states over a pair of models.
#[derive(Debug, Clone, PartialEq)]
pub struct GptPolytope {
    pub a: ComModel,
    pub b: ComModel,
    pub poly: VPolytope,
}

impl GptPolytope {
    pub fn new(a: ComModel, b: ComModel, poly: VPolytope) -> Result<Self> {
        if poly.ambient_dim() != a.ambient_dim() * b.ambient_dim() {
            return Err(shape(format!(
                "polytope in dimension {} for models of dimensions {} and {}",
                poly.ambient_dim(),
                a.ambient_dim(),
                b.ambient_dim()
            )));
        }
        let h = max_tensor_constraints(&a, &b);
        for v in poly.vertices() {
            let violation = h.max_violation(v)?;
            if violation > MEMBERSHIP_TOL {
                return Err(domain(format!(
                    "vertex outside the maximal tensor product (violation {violation:e})"
                )));
            }
        }
        Ok(GptPolytope { a, b, poly })
    }

    /// `Ω_A ⊗_min Ω_B`.
    pub fn minimal(a: &ComModel, b: &ComModel) -> Self {
        GptPolytope {
            a: a.clone(),
            b: b.clone(),
            poly: min_tensor(a, b),
        }
    }
}

/// Vertexwise marginals, reduced, in each model's coordinates.
pub fn gpt_tau(c: &GptPolytope) -> (VPolytope, VPolytope) {
    let (mut va, mut vb) = (Vec::new(), Vec::new());
    for v in c.poly.vertices() {
        let phi = BilinearState::from_coords(&c.a, &c.b, v).expect("dimension checked at construction");
        let (wa, wb) = marginals_unchecked(&phi, &c.a, &c.b);
        va.push(wa);
        vb.push(wb);
    }
    let reduce = |dim: usize, verts: Vec<Vec<f64>>| {
        let p = VPolytope::new(dim, verts).expect("nonempty");
        let keep = reduce_indices(&p);
        VPolytope::new(dim, keep.into_iter().map(|i| p.vertices()[i].clone()).collect()).expect("nonempty")
    };
    (reduce(c.a.ambient_dim(), va), reduce(c.b.ambient_dim(), vb))
}

/// Hull of all products of the factor vertices.
pub fn gpt_lambda(a: &ComModel, b: &ComModel, c1: &VPolytope, c2: &VPolytope) -> Result<GptPolytope> {
    if c1.ambient_dim() != a.ambient_dim() || c2.ambient_dim() != b.ambient_dim() {
        return Err(shape("factor polytopes do not match model dimensions"));
    }
    let mut verts = Vec::with_capacity(c1.len() * c2.len());
    for va in c1.vertices() {
        for vb in c2.vertices() {
            verts.push(BilinearState::product(va, vb).coords().to_vec());
        }
    }
    let p = VPolytope::new(a.ambient_dim() * b.ambient_dim(), verts)?;
    let keep = reduce_indices(&p);
    let poly = VPolytope::new(
        p.ambient_dim(),
        keep.into_iter().map(|i| p.vertices()[i].clone()).collect(),
    )?;
    Ok(GptPolytope {
        a: a.clone(),
        b: b.clone(),
        poly,
    })
}

pub fn gpt_lambda_tau(c: &GptPolytope) -> GptPolytope {
    let (c1, c2) = gpt_tau(c);
    gpt_lambda(&c.a, &c.b, &c1, &c2).expect("tau output matches model dimensions")
}

pub fn gpt_is_css(c: &GptPolytope, tol: f64) -> Result<bool> {
    polytope_equal(&gpt_lambda_tau(c).poly, &c.poly, tol)
}

/// Separability of a bilinear state: membership in `Ω_A ⊗_min Ω_B`.
/// The returned fit carries a separating hyperplane when the answer is no.
pub fn gpt_separability(phi: &BilinearState, a: &ComModel, b: &ComModel) -> Result<HullFit> {
    crate::comgeo::gpt_marginals(phi, a, b)?;
    hull_fit(phi.coords(), &min_tensor(a, b))
}

pub fn gpt_separable(phi: &BilinearState, a: &ComModel, b: &ComModel, tol: f64) -> Result<bool> {
    Ok(gpt_separability(phi, a, b)?.residual <= tol)
}

/// Largest composite size handled by [`classical_invariance_check`].
pub const CLASSICAL_CAP: usize = 32;

/// Builds the classical composite simplex and checks `Λ̃∘φ(Ω) = Ω`.
pub fn classical_invariance_check(n_a: usize, n_b: usize) -> Result<bool> {
    if n_a * n_b > CLASSICAL_CAP {
        return Err(Error::Unsupported(format!(
            "classical composite {n_a}x{n_b} exceeds {CLASSICAL_CAP} outcomes"
        )));
    }
    let (a, b) = (classical_model(n_a)?, classical_model(n_b)?);
    let omega = GptPolytope::minimal(&a, &b);
    gpt_is_css(&omega, CSS_TOL)
}

/// Backends for which the existence of a largest invariant subset is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Two qubits.
    Quantum,
    Classical {
        n_a: usize,
        n_b: usize,
    },
    /// Two gbits with the maximal tensor product as composite.
    GbitMax,
}

/// Named witnesses for a composite model: whether its separable subset is
/// invariant, and whether that subset is strictly smaller than the full
/// state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementModelCertificate {
    pub backend: String,
    pub separable_set_invariant: bool,
    pub strict: bool,
    pub witness: Option<String>,
}

pub fn certify_entanglement_model(backend: Backend) -> Result<EntanglementModelCertificate> {
    match backend {
        Backend::Quantum => {
            let bell = crate::qstate::bell_state(crate::qstate::BellKind::PhiPlus);
            let strict = !is_css(&QuantumPolytope::singleton(bell.clone()), CSS_TOL)?
                && ppt_verdict(&bell) == PptVerdict::Entangled;
            // The separable set is the hull of all products; its invariance is
            // checked on the product frame of the Pauli eigenstates.
            let frame = pauli_eigenstates();
            let mut vertices = Vec::new();
            for x in &frame {
                for y in &frame {
                    vertices.push(DensityMatrix::tensor(x, y).with_split(DimSplit::qubits())?);
                }
            }
            let invariant = is_css(&QuantumPolytope::new(vertices)?.reduced(), CSS_TOL)?;
            Ok(EntanglementModelCertificate {
                backend: "quantum:2x2".into(),
                separable_set_invariant: invariant,
                strict,
                witness: strict.then(|| "bell:phi+".into()),
            })
        }
        Backend::Classical { n_a, n_b } => {
            let invariant = classical_invariance_check(n_a, n_b)?;
            Ok(EntanglementModelCertificate {
                backend: format!("classical:{n_a}x{n_b}"),
                separable_set_invariant: invariant,
                strict: false,
                witness: None,
            })
        }
        Backend::GbitMax => {
            let g = crate::comgeo::gbit_model();
            let invariant = gpt_is_css(&GptPolytope::minimal(&g, &g), CSS_TOL)?;
            let pr = crate::comgeo::pr_box();
            let strict = !gpt_separable(&pr, &g, &g, CSS_TOL)?;
            Ok(EntanglementModelCertificate {
                backend: "gbit:max".into(),
                separable_set_invariant: invariant,
                strict,
                witness: strict.then(|| "prbox".into()),
            })
        }
    }
}

/// The six eigenstates of the Pauli matrices.
fn pauli_eigenstates() -> Vec<DensityMatrix> {
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
    .into_iter()
    .map(|r| crate::qstate::qubit_from_bloch(r).expect("unit Bloch vector"))
    .collect()
}

/// Marginal map of a composite theory, as used by the measures.
#[derive(Debug, Clone, PartialEq)]
pub enum MorphismSpec {
    QuantumPartialTrace { split: DimSplit },
    GptMarginal { a: ComModel, b: ComModel },
}

impl MorphismSpec {
    /// Largest deviation of `φ(x ⊗ y)` from `(x, y)` over the given
    /// product pairs; zero for a generalized partial trace.
    pub fn product_condition_residual(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        match self {
            MorphismSpec::QuantumPartialTrace { split } => {
                for (x, y) in pairs {
                    let (ma, mb) = (coords_to_matrix(x, split.dim_a)?, coords_to_matrix(y, split.dim_b)?);
                    let rho =
                        DensityMatrix::tensor(&DensityMatrix::single(ma.clone())?, &DensityMatrix::single(mb.clone())?);
                    let (ra, rb) = marginals(&rho);
                    worst = worst
                        .max((ra.matrix() - &ma).frobenius())
                        .max((rb.matrix() - &mb).frobenius());
                }
            }
            MorphismSpec::GptMarginal { a, b } => {
                for (x, y) in pairs {
                    let phi = BilinearState::product(x, y);
                    let (wa, wb) = crate::comgeo::gpt_marginals(&phi, a, b)?;
                    for (u, v) in wa.iter().zip(x).chain(wb.iter().zip(y)) {
                        worst = worst.max((u - v).abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}

fn coords_to_matrix(x: &[f64], n: usize) -> Result<ComplexMatrix> {
    if x.len() != 2 * n * n {
        return Err(shape(format!("{} coordinates for a {n}x{n} matrix", x.len())));
    }
    ComplexMatrix::from_vec(
        n,
        n,
        x.chunks(2).map(|c| num_complex::Complex64::new(c[0], c[1])).collect(),
    )
}

/// One line of a verdict report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub state: String,
    pub measure: f64,
    pub ppt_min_eig: f64,
    pub verdict: PptVerdict,
    pub css: bool,
}

impl VerdictRecord {
    pub fn evaluate(label: impl Into<String>, rho: &DensityMatrix, cfg: MeasureConfig) -> Result<Self> {
        Ok(VerdictRecord {
            state: label.into(),
            measure: g_measure(rho, cfg),
            ppt_min_eig: ppt_min_eigenvalue(rho),
            verdict: ppt_verdict(rho),
            css: is_css(&QuantumPolytope::singleton(rho.clone()), CSS_TOL)?,
        })
    }
}

/// Hull residual of a state against a state polytope, for reports.
pub fn membership_residual(rho: &DensityMatrix, c: &QuantumPolytope) -> Result<f64> {
    hull_residual(&rho.matrix().to_real_coords(), &c.to_vpolytope())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comgeo::{enumerate_max_vertices, gbit_model, pr_box, DEFAULT_DIM_CAP};
    use crate::qstate::{bell_state, purity, qubit_from_bloch, random_mixed, random_pure, werner_state, BellKind};

    fn q(r: [f64; 3]) -> DensityMatrix {
        qubit_from_bloch(r).unwrap()
    }

    fn two_qubit(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::tensor(a, b).with_split(DimSplit::qubits()).unwrap()
    }

    fn frob(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        (a.matrix() - b.matrix()).frobenius()
    }

    /// Four-term product decomposition of `werner_state(1/4)`: tetrahedral
    /// Bloch vectors of length √3/2 on A, mirrored in y on B.
    fn werner_quarter() -> Decomposition {
        let r = 3f64.sqrt() / 2.0;
        let s = 1.0 / 3f64.sqrt();
        let tet = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let terms = tet
            .iter()
            .map(|n| DecompositionTerm {
                p: 0.25,
                a: q([r * n[0], r * n[1], r * n[2]]),
                b: q([r * n[0], -r * n[1], r * n[2]]),
            })
            .collect();
        Decomposition::new(terms).unwrap()
    }

    #[test]
    fn tau_of_bell_singleton() {
        let (a, b) = tau(&QuantumPolytope::singleton(bell_state(BellKind::PhiPlus)));
        let half = DensityMatrix::maximally_mixed(DimSplit::new(2, 1).unwrap());
        assert_eq!(a.vertices().len(), 1);
        assert!(frob(&a.vertices()[0], &half) < 1e-15);
        assert!(frob(&b.vertices()[0], &half) < 1e-15);
    }

    #[test]
    fn tau_of_products() {
        let (r1, r1p, r2, r2p) = (
            q([0.0, 0.0, 1.0]),
            q([0.6, 0.0, 0.0]),
            q([0.0, 0.3, 0.0]),
            q([0.0, 0.0, -0.5]),
        );
        let c = QuantumPolytope::new(vec![two_qubit(&r1, &r2), two_qubit(&r1p, &r2p)]).unwrap();
        let (a, b) = tau(&c);
        assert_eq!(a.vertices().len(), 2);
        assert!(frob(&a.vertices()[0], &r1) < 1e-15 && frob(&a.vertices()[1], &r1p) < 1e-15);
        assert!(frob(&b.vertices()[0], &r2) < 1e-15 && frob(&b.vertices()[1], &r2p) < 1e-15);
    }

    #[test]
    fn tau_outputs_valid_states() {
        let verts: Vec<DensityMatrix> = (0..6)
            .map(|s| crate::qstate::density_from_pure(&random_pure(DimSplit::qubits(), s)))
            .collect();
        let (a, b) = tau(&QuantumPolytope::new(verts).unwrap());
        for v in a.vertices().iter().chain(b.vertices()) {
            assert!(crate::qstate::validate(v.matrix(), v.split()).unwrap().is_valid());
        }
    }

    #[test]
    fn lambda_of_basis_projectors() {
        let basis = QuantumPolytope::new(vec![q([0.0, 0.0, 1.0]), q([0.0, 0.0, -1.0])]).unwrap();
        let l = lambda_map(&basis, &basis).unwrap();
        assert_eq!(l.vertices().len(), 4);
        let two = QuantumPolytope::singleton(bell_state(BellKind::PhiPlus));
        assert!(matches!(lambda_map(&two, &basis), Err(Error::Shape(_))));
    }

    #[test]
    fn singleton_lambda_tau_is_pi() {
        for seed in 0..10 {
            let rho = random_mixed(DimSplit::qubits(), 1 + seed as usize % 4, seed).unwrap();
            let lt = lambda_tau(&QuantumPolytope::singleton(rho.clone()));
            assert_eq!(lt.vertices().len(), 1);
            assert_eq!(lt.vertices()[0].matrix(), pi_map(&rho).matrix());
        }
    }

    #[test]
    fn css_singletons() {
        let prod = two_qubit(&q([0.1, 0.2, 0.3]), &q([0.0, -0.7, 0.1]));
        assert!(is_css(&QuantumPolytope::singleton(prod), CSS_TOL).unwrap());
        let bell = QuantumPolytope::singleton(bell_state(BellKind::PhiPlus));
        assert!(!is_css(&bell, CSS_TOL).unwrap());
        assert!(css_distance(&bell).unwrap() > 0.1);
    }

    #[test]
    fn lambda_tau_idempotent_on_random_polytope() {
        let verts: Vec<DensityMatrix> = (0..3)
            .map(|s| random_mixed(DimSplit::qubits(), 2, 100 + s).unwrap())
            .collect();
        let once = lambda_tau(&QuantumPolytope::new(verts).unwrap());
        let twice = lambda_tau(&once);
        assert!(polytope_equal(&once.to_vpolytope(), &twice.to_vpolytope(), 1e-8).unwrap());
    }

    #[test]
    fn werner_quarter_witness() {
        let d = werner_quarter();
        assert!(frob(&d.state(), &werner_state(0.25).unwrap()) < 1e-14);
        let w = css_from_decomposition(&d);
        assert_eq!(w.vertices().len(), 16);
        assert!(w.contains(&werner_state(0.25).unwrap(), 1e-8).unwrap());
        assert!(is_css(&w, CSS_TOL).unwrap());
        let (c1, c2) = tau(&w);
        assert!(polytope_equal(&lambda_map(&c1, &c2).unwrap().to_vpolytope(), &w.to_vpolytope(), 1e-8).unwrap());
    }

    #[test]
    fn decomposition_edge_cases() {
        let (a, b) = (q([0.0, 0.0, 1.0]), q([1.0, 0.0, 0.0]));
        let single = Decomposition::new(vec![DecompositionTerm {
            p: 1.0,
            a: a.clone(),
            b: b.clone(),
        }])
        .unwrap();
        let w = css_from_decomposition(&single);
        assert_eq!(w.vertices().len(), 1);
        assert!(frob(&w.vertices()[0], &two_qubit(&a, &b)) < 1e-15);

        let (a2, b2) = (q([0.0, 0.0, -1.0]), q([0.0, 1.0, 0.0]));
        let two = Decomposition::new(vec![
            DecompositionTerm {
                p: 0.3,
                a: a.clone(),
                b: b.clone(),
            },
            DecompositionTerm { p: 0.7, a: a2, b: b2 },
        ])
        .unwrap();
        let w = css_from_decomposition(&two);
        assert_eq!(w.vertices().len(), 4);
        assert!(is_css(&w, CSS_TOL).unwrap());

        let bad = |p: f64| {
            Decomposition::new(vec![DecompositionTerm {
                p,
                a: a.clone(),
                b: b.clone(),
            }])
        };
        assert!(matches!(bad(0.9), Err(Error::Domain(_))));
        assert!(matches!(bad(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(Decomposition::new(vec![]), Err(Error::Domain(_))));

        let json = r#"{"terms":[{"p":1.0,"a":{"type":"pure","dim_a":2,"dim_b":1,"amplitudes":{"rows":2,"cols":1,"re":[1.0,0.0],"im":[0.0,0.0]}},"b":{"type":"pure","dim_a":2,"dim_b":1,"amplitudes":{"rows":2,"cols":1,"re":[0.0,1.0],"im":[0.0,0.0]}}}]}"#;
        let d: Decomposition = serde_json::from_str(json).unwrap();
        assert!(frob(&d.state(), &two_qubit(&q([0.0, 0.0, 1.0]), &q([0.0, 0.0, -1.0]))) < 1e-15);
        let back: Decomposition = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let bad_json = json.replace("\"p\":1.0", "\"p\":0.5");
        assert!(serde_json::from_str::<Decomposition>(&bad_json).is_err());
    }

    #[test]
    fn product_checks() {
        let prod = two_qubit(&q([0.3, 0.0, 0.1]), &q([0.0, 0.0, 0.9]));
        assert!(is_product(&prod, 1e-12));
        assert!(!is_product(&bell_state(BellKind::PhiPlus), 1e-6));
        assert!(!is_product(&werner_state(0.01).unwrap(), 1e-6));
    }

    #[test]
    fn ppt_values() {
        let bell = bell_state(BellKind::PhiPlus);
        assert!((ppt_min_eigenvalue(&bell) + 0.5).abs() < 1e-12);
        assert_eq!(ppt_verdict(&bell), PptVerdict::Entangled);
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let expected = (1.0 - 3.0 * p) / 4.0;
            assert!((ppt_min_eigenvalue(&werner_state(p).unwrap()) - expected).abs() < 1e-9);
        }
        let prod = two_qubit(&q([0.3, 0.0, 0.1]), &q([0.0, 0.0, 0.9]));
        assert!(ppt_min_eigenvalue(&prod) >= -1e-12);
        assert_eq!(ppt_verdict(&prod), PptVerdict::Separable);
        let big = random_mixed(DimSplit::new(3, 3).unwrap(), 9, 4).unwrap();
        let prod33 = pi_map(&big);
        assert_eq!(ppt_verdict(&prod33), PptVerdict::Inconclusive);
        assert!(ppt_is_conclusive(DimSplit::new(3, 2).unwrap()));
        assert!(ppt_is_conclusive(DimSplit::new(5, 1).unwrap()));
        assert!(!ppt_is_conclusive(DimSplit::new(2, 4).unwrap()));
    }

    #[test]
    fn gpt_separability_checks() {
        let g = gbit_model();
        let min = min_tensor(&g, &g);
        for v in min.vertices() {
            let phi = BilinearState::from_coords(&g, &g, v).unwrap();
            assert!(gpt_separable(&phi, &g, &g, 1e-9).unwrap());
        }
        let mut uniform = vec![0.0; 9];
        for v in min.vertices() {
            for (u, x) in uniform.iter_mut().zip(v) {
                *u += x / 16.0;
            }
        }
        assert!(gpt_separable(&BilinearState::from_coords(&g, &g, &uniform).unwrap(), &g, &g, 1e-9).unwrap());

        let fit = gpt_separability(&pr_box(), &g, &g).unwrap();
        assert!(fit.residual > 1e-3);
        let cert = fit.separation.expect("PR box must be separated from the product hull");
        let margin = cert
            .verify(pr_box().coords(), &min)
            .expect("certificate holds on every vertex");
        assert!(margin > 1e-6);
        assert!(matches!(
            gpt_separable(&pr_box().scaled(1.2), &g, &g, 1e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn measure_values() {
        let bell = bell_state(BellKind::PhiPlus);
        let sm = g_measure(&bell, MeasureConfig::default());
        assert!((sm - 3f64.sqrt() / 2.0).abs() < 1e-12);
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let v = g_measure(&werner_state(p).unwrap(), MeasureConfig::default());
            assert!((v - 3f64.sqrt() / 2.0 * p).abs() < 1e-9);
        }
        let prod = two_qubit(&q([0.3, 0.0, 0.1]), &q([0.0, 0.0, 0.9]));
        for cfg in MeasureConfig::all() {
            assert!(g_measure(&prod, cfg) <= 1e-12, "{cfg:?}");
            assert!(g_measure(&bell, cfg) > 1e-3, "{cfg:?}");
        }
        // Δ = I/4 − ρ_Bell has eigenvalues {−3/4, 1/4, 1/4, 1/4}.
        let trace = g_measure(&bell, MeasureConfig::new(FKind::Identity, NormKind::Trace));
        assert!((trace - 1.5).abs() < 1e-12);
        let sq = g_measure(&bell, MeasureConfig::new(FKind::Square, NormKind::Trace));
        assert!((sq - 0.75).abs() < 1e-12);
        let max = g_measure(&bell, MeasureConfig::new(FKind::Abs, NormKind::MaxAbs));
        assert!((max - 0.5).abs() < 1e-15);
        assert_eq!("square".parse::<FKind>().unwrap(), FKind::Square);
        assert!("cube".parse::<FKind>().is_err());
    }

    #[test]
    fn gpt_measure_vanishes_on_products() {
        let g = gbit_model();
        let prod = BilinearState::product(&g.vertices()[0], &g.vertices()[2]);
        let c = classical_model(3).unwrap();
        let g3 = BilinearState::product(&g.vertices()[1], &c.vertices()[2]);
        for cfg in MeasureConfig::all() {
            assert!(gpt_g_measure(&prod, &g, &g, cfg).unwrap() < 1e-15);
            assert!(gpt_g_measure(&g3, &g, &c, cfg).unwrap() < 1e-15);
            assert!(gpt_g_measure(&pr_box(), &g, &g, cfg).unwrap() > 0.1);
        }
    }

    #[test]
    fn psi_preimage() {
        let (r1, r2) = (q([0.0, 0.5, 0.0]), q([0.2, 0.0, 0.0]));
        let s1 = QuantumPolytope::singleton(r1.clone());
        let s2 = QuantumPolytope::singleton(r2.clone());
        assert!(psi_preimage_member(&two_qubit(&r1, &r2), &s1, &s2, 1e-9).unwrap());
        let half = QuantumPolytope::singleton(q([0.0, 0.0, 0.0]));
        let bell = bell_state(BellKind::PhiPlus);
        assert!(psi_preimage_member(&bell, &half, &half, 1e-9).unwrap());
        let zero = QuantumPolytope::singleton(q([0.0, 0.0, 1.0]));
        assert!(!psi_preimage_member(&bell, &zero, &half, 1e-9).unwrap());
    }

    #[test]
    fn classical_and_gbit_invariance() {
        assert!(classical_invariance_check(2, 2).unwrap());
        assert!(classical_invariance_check(2, 3).unwrap());
        assert!(matches!(classical_invariance_check(6, 6), Err(Error::Unsupported(_))));

        let g = gbit_model();
        assert!(gpt_is_css(&GptPolytope::minimal(&g, &g), CSS_TOL).unwrap());
        let max = enumerate_max_vertices(&max_tensor_constraints(&g, &g), DEFAULT_DIM_CAP).unwrap();
        let omega_max = GptPolytope::new(g.clone(), g.clone(), max).unwrap();
        assert!(!gpt_is_css(&omega_max, CSS_TOL).unwrap());
        // Λ̃∘φ(Ω_max) collapses to Ω_min.
        assert!(polytope_equal(&gpt_lambda_tau(&omega_max).poly, &min_tensor(&g, &g), 1e-9).unwrap());
    }

    #[test]
    fn gpt_polytope_validation() {
        let g = gbit_model();
        let out = VPolytope::new(9, vec![pr_box().scaled(1.1).coords().to_vec()]).unwrap();
        assert!(matches!(
            GptPolytope::new(g.clone(), g.clone(), out),
            Err(Error::Domain(_))
        ));
        let wrong = VPolytope::new(4, vec![vec![0.0; 4]]).unwrap();
        assert!(matches!(GptPolytope::new(g.clone(), g, wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn certificates() {
        let quantum = certify_entanglement_model(Backend::Quantum).unwrap();
        assert!(quantum.separable_set_invariant && quantum.strict);
        assert_eq!(quantum.witness.as_deref(), Some("bell:phi+"));
        let classical = certify_entanglement_model(Backend::Classical { n_a: 2, n_b: 2 }).unwrap();
        assert!(classical.separable_set_invariant && !classical.strict);
        let gbit = certify_entanglement_model(Backend::GbitMax).unwrap();
        assert!(gbit.separable_set_invariant && gbit.strict);
        assert_eq!(gbit.witness.as_deref(), Some("prbox"));
    }

    #[test]
    fn product_condition_for_both_morphisms() {
        let qt = MorphismSpec::QuantumPartialTrace {
            split: DimSplit::qubits(),
        };
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            [([0.1, 0.2, 0.3], [0.0, 0.0, -1.0]), ([0.5, -0.5, 0.0], [0.3, 0.3, 0.3])]
                .iter()
                .map(|(a, b)| (q(*a).matrix().to_real_coords(), q(*b).matrix().to_real_coords()))
                .collect();
        assert!(qt.product_condition_residual(&pairs).unwrap() < 1e-15);

        let g = gbit_model();
        let gm = MorphismSpec::GptMarginal {
            a: g.clone(),
            b: g.clone(),
        };
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = g
            .vertices()
            .iter()
            .flat_map(|a| g.vertices().iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        assert_eq!(gm.product_condition_residual(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn pure_state_criterion_and_marginal_purity() {
        for seed in 0..30 {
            let rho = crate::qstate::density_from_pure(&random_pure(DimSplit::qubits(), seed));
            let css = is_css(&QuantumPolytope::singleton(rho.clone()), CSS_TOL).unwrap();
            let (a, b) = marginals(&rho);
            assert_eq!(css, purity(&a) >= 1.0 - 1e-10);
            if ppt_verdict(&rho) == PptVerdict::Entangled {
                assert!(purity(&a) <= 1.0 - 1e-8 && purity(&b) <= 1.0 - 1e-8);
            }
        }
        let prod = two_qubit(&q([0.0, 0.0, 1.0]), &q([1.0, 0.0, 0.0]));
        assert!(is_css(&QuantumPolytope::singleton(prod), CSS_TOL).unwrap());
    }

    #[test]
    fn verdict_record_json() {
        let rec =
            VerdictRecord::evaluate("bell:phi+", &bell_state(BellKind::PhiPlus), MeasureConfig::default()).unwrap();
        assert_eq!(rec.verdict, PptVerdict::Entangled);
        assert!(!rec.css);
        let json = serde_json::to_value(&rec).unwrap();
        for key in ["state", "measure", "ppt_min_eig", "verdict", "css"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["verdict"], "entangled");
    }

    #[test]
    fn polytope_json_round_trip() {
        let w = css_from_decomposition(&werner_quarter());
        let json = serde_json::to_string(&w).unwrap();
        let back: QuantumPolytope = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<QuantumPolytope>(r#"{"vertices":[]}"#).is_err());
    }
}
