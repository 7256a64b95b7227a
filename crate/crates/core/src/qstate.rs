//! Quantum states on a bipartite Hilbert space.
//!
//! [`DensityMatrix`] is validated when it is built; every operation in this
//! module then assumes the invariants hold. [`validate`] re-checks an
//! arbitrary matrix and reports the size of each violation.
//!
//! Random ensembles are drawn from [`StateRng`] (ChaCha8, seeded through
//! `seed_from_u64`), so a seed fixes an ensemble bit for bit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::matcore::{hermitian_eig, kron, partial_trace, ComplexMatrix, DimSplit, Subsystem};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const EIGENVALUE_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const TRACE_IMAG_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-12;

/// Generator behind every random ensemble.
pub type StateRng = ChaCha8Rng;

/// Generator for `seed`.
pub fn rng_from_seed(seed: u64) -> StateRng {
    StateRng::seed_from_u64(seed)
}

/// Independent generator for stream `stream` under `seed`; used to hand
/// separate generators to concurrent workers.
pub fn split_rng(seed: u64, stream: u64) -> StateRng {
    let mut rng = StateRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Hermitian, positive semidefinite, unit-trace matrix on a bipartite space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    split: DimSplit,
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix({}) {:?}", self.split, self.mat)
    }
}

/// Magnitudes of each density-matrix condition for a candidate matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub hermitian_deviation: f64,
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub trace_imag: f64,
}

impl ValidationReport {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.hermitian_deviation <= HERMITIAN_TOL) {
            v.push(format!("not Hermitian: max deviation {:e}", self.hermitian_deviation));
        }
        if !(self.min_eigenvalue >= -EIGENVALUE_TOL) {
            v.push(format!(
                "not positive semidefinite: min eigenvalue {:e}",
                self.min_eigenvalue
            ));
        }
        if !(self.trace_deviation <= TRACE_TOL) {
            v.push(format!("trace off by {:e}", self.trace_deviation));
        }
        if !(self.trace_imag <= TRACE_IMAG_TOL) {
            v.push(format!("trace has imaginary part {:e}", self.trace_imag));
        }
        v
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Checks every density-matrix condition on `mat`.
pub fn validate(mat: &ComplexMatrix, split: DimSplit) -> Result<ValidationReport> {
    if mat.rows() != split.total() || mat.cols() != split.total() {
        return Err(shape(format!(
            "{}x{} matrix does not match split {split}",
            mat.rows(),
            mat.cols()
        )));
    }
    let hermitian_deviation = mat.hermitian_deviation();
    let min_eigenvalue = if hermitian_deviation <= HERMITIAN_TOL {
        hermitian_eig(mat)?.min()
    } else {
        hermitian_eig(&mat.hermitian_part())?.min()
    };
    let tr = mat.trace();
    Ok(ValidationReport {
        hermitian_deviation,
        min_eigenvalue,
        trace_deviation: (tr.re - 1.0).abs(),
        trace_imag: tr.im.abs(),
    })
}

impl DensityMatrix {
    /// Validates `mat` and stores its Hermitian part.
    pub fn new(mat: ComplexMatrix, split: DimSplit) -> Result<Self> {
        let report = validate(&mat, split)?;
        let problems = report.violations();
        if !problems.is_empty() {
            return Err(domain(format!("invalid density matrix: {}", problems.join("; "))));
        }
        Ok(DensityMatrix {
            mat: mat.hermitian_part(),
            split,
        })
    }

    /// Wraps a matrix known to be a state (product of marginals, mixtures of
    /// states, conjugation by unitaries).
    pub(crate) fn from_trusted(mat: ComplexMatrix, split: DimSplit) -> Self {
        debug_assert_eq!(mat.rows(), split.total());
        DensityMatrix {
            mat: mat.hermitian_part(),
            split,
        }
    }

    /// State on a single system, seen as the split `n x 1`.
    pub fn single(mat: ComplexMatrix) -> Result<Self> {
        let n = mat.rows();
        Self::new(mat, DimSplit::new(n, 1)?)
    }

    pub fn maximally_mixed(split: DimSplit) -> Self {
        let n = split.total();
        Self::from_trusted(ComplexMatrix::identity(n).scale_real(1.0 / n as f64), split)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn split(&self) -> DimSplit {
        self.split
    }

    pub fn dim(&self) -> usize {
        self.split.total()
    }

    /// Same matrix, relabelled with another factorization of its dimension.
    pub fn with_split(&self, split: DimSplit) -> Result<Self> {
        if split.total() != self.dim() {
            return Err(shape(format!("cannot relabel dimension {} as {split}", self.dim())));
        }
        Ok(DensityMatrix {
            mat: self.mat.clone(),
            split,
        })
    }

    /// `Σ pᵢ ρᵢ` over states sharing a split; weights must be a probability vector.
    pub fn mixture(terms: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| domain("empty mixture"))?;
        let split = first.1.split;
        let mut total = 0.0;
        let mut acc = ComplexMatrix::zeros(split.total(), split.total());
        for (p, rho) in terms {
            if rho.split != split {
                return Err(shape(format!("mixing {} with {}", split, rho.split)));
            }
            if !(*p >= 0.0) {
                return Err(domain(format!("negative mixture weight {p}")));
            }
            total += p;
            acc = &acc + &rho.mat.scale_real(*p);
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(domain(format!("mixture weights sum to {total}")));
        }
        Ok(Self::from_trusted(acc, split))
    }

    /// `ρ_A ⊗ ρ_B` with split `dim(ρ_A) x dim(ρ_B)`.
    pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        let split = DimSplit {
            dim_a: a.dim(),
            dim_b: b.dim(),
        };
        Self::from_trusted(kron(&a.mat, &b.mat), split)
    }

    /// `W ρ W†` for a unitary `W` of matching size; the split is kept.
    pub fn conjugate(&self, w: &ComplexMatrix) -> Result<Self> {
        if w.rows() != self.dim() || !w.is_square() {
            return Err(shape(format!(
                "unitary is {}x{} but state has dimension {}",
                w.rows(),
                w.cols(),
                self.dim()
            )));
        }
        let out = &(w * &self.mat) * &w.adjoint();
        Ok(Self::from_trusted(out, self.split))
    }

    /// `(U ⊗ V) ρ (U ⊗ V)†`.
    pub fn local_unitary(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.split.dim_a || v.rows() != self.split.dim_b {
            return Err(shape(format!(
                "local unitaries {}x{} do not match split {}",
                u.rows(),
                v.rows(),
                self.split
            )));
        }
        self.conjugate(&kron(u, v))
    }

    pub fn partial_trace(&self, over: Subsystem) -> DensityMatrix {
        let kept = partial_trace(&self.mat, self.split, over).expect("split checked at construction");
        let n = kept.rows();
        Self::from_trusted(kept, DimSplit { dim_a: n, dim_b: 1 })
    }
}

/// Normalized state vector on a bipartite space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    split: DimSplit,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>, split: DimSplit) -> Result<Self> {
        if amplitudes.len() != split.total() {
            return Err(shape(format!("{} amplitudes for split {split}", amplitudes.len())));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !((norm_sqr - 1.0).abs() <= NORM_TOL) {
            return Err(domain(format!("state vector has squared norm {norm_sqr}")));
        }
        Ok(PureState { amplitudes, split })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>, split: DimSplit) -> Result<Self> {
        let n = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(domain("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes.into_iter().map(|z| z / n).collect(), split)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn split(&self) -> DimSplit {
        self.split
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::outer(&psi.amplitudes, &psi.amplitudes), psi.split)
}

/// Reduced states `(ρ_A, ρ_B)`, each labelled as a single system.
pub fn marginals(rho: &DensityMatrix) -> (DensityMatrix, DensityMatrix) {
    (rho.partial_trace(Subsystem::B), rho.partial_trace(Subsystem::A))
}

/// `ρ ↦ ρ_A ⊗ ρ_B`, keeping the split of `ρ`.
pub fn pi_map(rho: &DensityMatrix) -> DensityMatrix {
    let (a, b) = marginals(rho);
    DensityMatrix::from_trusted(kron(&a.mat, &b.mat), rho.split)
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ.
    rho.mat.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        }
    }
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| domain(format!("unknown Bell state '{s}' (expected phi+, phi-, psi+ or psi-)")))
    }
}

pub fn bell_vector(kind: BellKind) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (z, p, m) = (0.0, h, -h);
    let amps = match kind {
        BellKind::PhiPlus => [p, z, z, p],
        BellKind::PhiMinus => [p, z, z, m],
        BellKind::PsiPlus => [z, p, p, z],
        BellKind::PsiMinus => [z, p, m, z],
    };
    PureState {
        amplitudes: amps.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        split: DimSplit::qubits(),
    }
}

pub fn bell_state(kind: BellKind) -> DensityMatrix {
    density_from_pure(&bell_vector(kind))
}

/// `p |Φ⁺⟩⟨Φ⁺| + (1 − p) I/4`.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("Werner parameter must lie in [0, 1], got {p}")));
    }
    let bell = bell_state(BellKind::PhiPlus);
    let noise = ComplexMatrix::identity(4).scale_real((1.0 - p) / 4.0);
    Ok(DensityMatrix::from_trusted(
        &bell.mat.scale_real(p) + &noise,
        DimSplit::qubits(),
    ))
}

/// Qubit state `(I + r·σ)/2`; requires `|r| ≤ 1`.
pub fn qubit_from_bloch(r: [f64; 3]) -> Result<DensityMatrix> {
    let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 1.0 + EIGENVALUE_TOL {
        return Err(domain(format!("Bloch vector of length {len} exceeds 1")));
    }
    let m = ComplexMatrix::from_vec(
        2,
        2,
        vec![
            Complex64::new((1.0 + r[2]) / 2.0, 0.0),
            Complex64::new(r[0] / 2.0, -r[1] / 2.0),
            Complex64::new(r[0] / 2.0, r[1] / 2.0),
            Complex64::new((1.0 - r[2]) / 2.0, 0.0),
        ],
    )?;
    Ok(DensityMatrix::from_trusted(m, DimSplit::new(2, 1)?))
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn random_pure_with<R: Rng + ?Sized>(split: DimSplit, rng: &mut R) -> PureState {
    loop {
        let v: Vec<Complex64> = (0..split.total()).map(|_| complex_normal(rng)).collect();
        if let Ok(psi) = PureState::normalized(v, split) {
            return psi;
        }
    }
}

pub fn random_pure(split: DimSplit, seed: u64) -> PureState {
    random_pure_with(split, &mut rng_from_seed(seed))
}

/// `G G† / tr(G G†)` for a `dim x rank` Ginibre matrix `G`.
pub fn random_mixed_with<R: Rng + ?Sized>(split: DimSplit, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 {
        return Err(domain("rank must be at least 1"));
    }
    let n = split.total();
    let g = ComplexMatrix::from_fn(n, rank, |_, _| complex_normal(rng));
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    Ok(DensityMatrix::from_trusted(gg.scale_real(1.0 / tr), split))
}

pub fn random_mixed(split: DimSplit, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_mixed_with(split, rank, &mut rng_from_seed(seed))
}

/// Haar-random unitary: Gram-Schmidt on a Ginibre matrix, which leaves the
/// triangular factor with a positive diagonal.
pub fn random_unitary_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
        // Two passes of modified Gram-Schmidt keep orthogonality at machine precision.
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i]))
}

pub fn random_unitary(dim: usize, seed: u64) -> Result<ComplexMatrix> {
    random_unitary_with(dim, &mut rng_from_seed(seed))
}

/// Either flavor of state, as read from or written to JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Density(DensityMatrix),
    Pure(PureState),
}

impl State {
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            State::Density(rho) => rho.clone(),
            State::Pure(psi) => density_from_pure(psi),
        }
    }
}

impl Serialize for State {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            State::Density(rho) => rho.serialize(s),
            State::Pure(psi) => psi.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        StateJson::deserialize(d)?
            .into_state()
            .map_err(serde::de::Error::custom)
    }
}

/// `{"type": "density"|"pure", "dim_a", "dim_b", "matrix"|"amplitudes"}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum StateJson {
    Density {
        dim_a: usize,
        dim_b: usize,
        matrix: ComplexMatrix,
    },
    Pure {
        dim_a: usize,
        dim_b: usize,
        amplitudes: ComplexMatrix,
    },
}

impl StateJson {
    fn into_state(self) -> Result<State> {
        match self {
            StateJson::Density { dim_a, dim_b, matrix } => Ok(State::Density(DensityMatrix::new(
                matrix,
                DimSplit::new(dim_a, dim_b)?,
            )?)),
            StateJson::Pure {
                dim_a,
                dim_b,
                amplitudes,
            } => {
                if amplitudes.cols() != 1 {
                    return Err(shape("amplitudes must be a single column"));
                }
                Ok(State::Pure(PureState::new(
                    amplitudes.as_slice().to_vec(),
                    DimSplit::new(dim_a, dim_b)?,
                )?))
            }
        }
    }
}

impl TryFrom<StateJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        Ok(j.into_state()?.to_density())
    }
}

impl From<DensityMatrix> for StateJson {
    fn from(rho: DensityMatrix) -> Self {
        StateJson::Density {
            dim_a: rho.split.dim_a,
            dim_b: rho.split.dim_b,
            matrix: rho.mat,
        }
    }
}

impl TryFrom<StateJson> for PureState {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        match j.into_state()? {
            State::Pure(psi) => Ok(psi),
            State::Density(_) => Err(domain("expected a pure state, found a density matrix")),
        }
    }
}

impl From<PureState> for StateJson {
    fn from(psi: PureState) -> Self {
        let n = psi.amplitudes.len();
        StateJson::Pure {
            dim_a: psi.split.dim_a,
            dim_b: psi.split.dim_b,
            amplitudes: ComplexMatrix::from_vec(n, 1, psi.amplitudes).expect("nonempty amplitude vector"),
        }
    }
}
