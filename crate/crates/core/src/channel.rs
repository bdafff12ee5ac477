//! States, channels and their Choi/Kraus representations.
//!
//! Choi matrices are unnormalized and ordered output ⊗ input:
//! `J = Σ_ik Φ(E_ik) ⊗ E_ik`, so `J[(a,i),(b,k)] = Φ(E_ik)[a,b]` and trace
//! preservation reads `tr_out J = 1`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_finite, ensure_square, hermitian_eigen, hermitian_op_norm, hermiticity_defect,
    hermitize, identity, partial_trace_sys, tol, CMatrix, CVector, C64,
};

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m, "density matrix")?;
        ensure_finite(&m)?;
        let defect = hermiticity_defect(&m);
        if defect > tol::HERMITIAN {
            return Err(Error::InvalidState(format!("hermiticity defect {defect:.3e}")));
        }
        let trace = m.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > tol::STATE {
            return Err(Error::InvalidState(format!("trace {trace}")));
        }
        let min_eig = hermitian_eigen(&m).values[0];
        if min_eig < -tol::STATE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state vector norm {norm}")));
        }
        Self::new(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        hermitian_eigen(&self.0)
            .values
            .iter()
            .filter(|&&v| v > threshold)
            .count()
    }

    /// Weighted pure components `(p, |a⟩)` with `ρ = Σ p |a⟩⟨a|`, dropping
    /// weights below `1e-15`.
    pub fn components(&self) -> Vec<(f64, CVector)> {
        let eig = hermitian_eigen(&self.0);
        (0..self.dim())
            .rev()
            .filter(|&i| eig.values[i] > 1e-15)
            .map(|i| (eig.values[i], eig.vectors.column(i).into_owned()))
            .collect()
    }
}

/// A linear map between matrix spaces, stored by its Choi matrix. Not
/// necessarily CPTP; differences of channels and GKSL generators live here.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMap {
    dim_in: usize,
    dim_out: usize,
    choi: CMatrix,
}

impl ChoiMap {
    pub fn new(dim_in: usize, dim_out: usize, choi: CMatrix) -> Result<Self> {
        let d = dim_in * dim_out;
        if d == 0 || choi.nrows() != d || choi.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix for {dim_in}->{dim_out} must be {d}x{d}, got {}x{}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        ensure_finite(&choi)?;
        Ok(ChoiMap { dim_in, dim_out, choi })
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        let d = dim_in * dim_out;
        ChoiMap { dim_in, dim_out, choi: CMatrix::zeros(d, d) }
    }

    pub fn identity(n: usize) -> Self {
        let omega = maximally_entangled(n);
        ChoiMap { dim_in: n, dim_out: n, choi: &omega * omega.adjoint() }
    }

    /// `Σ_j vec(K_j) vec(K_j)†` with row-major `vec`. No completeness check.
    pub fn from_kraus_operators(ops: &[CMatrix]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidKraus("empty Kraus set".into()))?;
        let (dim_out, dim_in) = first.shape();
        let d = dim_in * dim_out;
        let mut choi = CMatrix::zeros(d, d);
        for k in ops {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
            }
            ensure_finite(k)?;
            let v = crate::linalg::vec_row_major(k);
            choi += &v * v.adjoint();
        }
        Self::new(dim_in, dim_out, choi)
    }

    /// From a row-major superoperator `S` with `vec(Φ(ρ)) = S vec(ρ)`.
    pub fn from_superoperator(dim_in: usize, dim_out: usize, s: &CMatrix) -> Result<Self> {
        if s.nrows() != dim_out * dim_out || s.ncols() != dim_in * dim_in {
            return Err(Error::DimensionMismatch("superoperator shape".into()));
        }
        let d = dim_in * dim_out;
        let choi = CMatrix::from_fn(d, d, |r, c| {
            let (a, i) = (r / dim_in, r % dim_in);
            let (b, k) = (c / dim_in, c % dim_in);
            s[(a * dim_out + b, i * dim_in + k)]
        });
        Self::new(dim_in, dim_out, choi)
    }

    pub fn superoperator(&self) -> CMatrix {
        let (ni, no) = (self.dim_in, self.dim_out);
        CMatrix::from_fn(no * no, ni * ni, |r, c| {
            let (a, b) = (r / no, r % no);
            let (i, k) = (c / ni, c % ni);
            self.choi[(a * ni + i, b * ni + k)]
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn into_choi(self) -> CMatrix {
        self.choi
    }

    /// `Φ(ρ)[a,b] = Σ_ik J[(a,i),(b,k)] ρ[i,k]`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let ni = self.dim_in;
        if rho.shape() != (ni, ni) {
            return Err(Error::DimensionMismatch(format!(
                "input must be {ni}x{ni}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(CMatrix::from_fn(self.dim_out, self.dim_out, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..ni {
                for k in 0..ni {
                    acc += self.choi[(a * ni + i, b * ni + k)] * rho[(i, k)];
                }
            }
            acc
        }))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ChoiMap) -> Result<ChoiMap> {
        if inner.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch("composition dimensions".into()));
        }
        let s = self.superoperator() * inner.superoperator();
        ChoiMap::from_superoperator(inner.dim_in, self.dim_out, &s)
    }

    pub fn sub(&self, other: &ChoiMap) -> Result<ChoiMap> {
        self.check_same_shape(other)?;
        Ok(ChoiMap { dim_in: self.dim_in, dim_out: self.dim_out, choi: &self.choi - &other.choi })
    }

    pub fn add(&self, other: &ChoiMap) -> Result<ChoiMap> {
        self.check_same_shape(other)?;
        Ok(ChoiMap { dim_in: self.dim_in, dim_out: self.dim_out, choi: &self.choi + &other.choi })
    }

    pub fn scale(&self, s: f64) -> ChoiMap {
        ChoiMap { dim_in: self.dim_in, dim_out: self.dim_out, choi: self.choi.scale(s) }
    }

    fn check_same_shape(&self, other: &ChoiMap) -> Result<()> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("maps differ in dimensions".into()));
        }
        Ok(())
    }

    /// `tr_out J`, which equals the identity for trace-preserving maps.
    pub fn trace_out(&self) -> CMatrix {
        partial_trace_sys(&self.choi, self.dim_out, self.dim_in).expect("shape checked")
    }
}

impl AsRef<ChoiMap> for ChoiMap {
    fn as_ref(&self) -> &ChoiMap {
        self
    }
}

/// `Σ_i |i⟩ ⊗ |i⟩`, unnormalized.
pub fn maximally_entangled(n: usize) -> CVector {
    let mut v = CVector::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = C64::new(1.0, 0.0);
    }
    v
}

/// Outcome of [`validate_cptp`].
#[derive(Debug, Clone, PartialEq)]
pub struct CptpReport {
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub tp_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for CptpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity defect {:.3e}, min Choi eigenvalue {:.3e}, trace defect {:.3e} (tol {:.1e})",
            self.hermiticity_defect, self.min_eigenvalue, self.tp_defect, self.tolerance
        )
    }
}

pub fn validate_cptp(map: &impl AsRef<ChoiMap>, tolerance: f64) -> CptpReport {
    let map = map.as_ref();
    let hermiticity_defect = hermiticity_defect(&map.choi);
    let min_eigenvalue = hermitian_eigen(&map.choi).values[0];
    let tp_defect = hermitian_op_norm(&(map.trace_out() - identity(map.dim_in)));
    let pass = hermiticity_defect <= tolerance && min_eigenvalue >= -tolerance && tp_defect <= tolerance;
    CptpReport { hermiticity_defect, min_eigenvalue, tp_defect, tolerance, pass }
}

/// A validated CPTP map with a lazily computed Kraus decomposition.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    map: ChoiMap,
    kraus: OnceLock<KrausSet>,
}

impl QuantumChannel {
    pub fn new(map: ChoiMap) -> Result<Self> {
        Self::with_tolerance(map, tol::CHANNEL)
    }

    pub fn with_tolerance(map: ChoiMap, tolerance: f64) -> Result<Self> {
        let report = validate_cptp(&map, tolerance);
        if !report.pass {
            return Err(Error::NotCptp(report.to_string()));
        }
        Ok(QuantumChannel { map, kraus: OnceLock::new() })
    }

    pub fn from_choi(dim_in: usize, dim_out: usize, choi: CMatrix) -> Result<Self> {
        Self::new(ChoiMap::new(dim_in, dim_out, choi)?)
    }

    pub fn identity(n: usize) -> Self {
        QuantumChannel { map: ChoiMap::identity(n), kraus: OnceLock::new() }
    }

    /// Unitary conjugation `ρ ↦ UρU†`.
    pub fn unitary(u: &crate::linalg::Unitary) -> Self {
        let map = ChoiMap::from_kraus_operators(std::slice::from_ref(u.matrix())).expect("square");
        QuantumChannel { map, kraus: OnceLock::new() }
    }

    pub fn dim_in(&self) -> usize {
        self.map.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.map.dim_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.map.choi
    }

    pub fn as_map(&self) -> &ChoiMap {
        &self.map
    }

    /// Kraus operators from the default-tolerance Choi eigendecomposition.
    pub fn kraus(&self) -> &KrausSet {
        self.kraus
            .get_or_init(|| kraus_from_choi(self, None).expect("validated channel"))
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.map.apply(rho)
    }

    /// `self ∘ inner`, revalidated.
    pub fn compose(&self, inner: &QuantumChannel) -> Result<QuantumChannel> {
        QuantumChannel::with_tolerance(self.map.compose(&inner.map)?, 1e-9)
    }
}

impl AsRef<ChoiMap> for QuantumChannel {
    fn as_ref(&self) -> &ChoiMap {
        &self.map
    }
}

impl PartialEq for QuantumChannel {
    fn eq(&self, other: &Self) -> bool {
        self.map == other.map
    }
}

/// A complete set of Kraus operators (`Σ K†K = 1` within `1e-10`).
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    dim_in: usize,
    dim_out: usize,
    operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidKraus("empty Kraus set".into()))?;
        let (dim_out, dim_in) = first.shape();
        let mut sum = CMatrix::zeros(dim_in, dim_in);
        for k in &operators {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
            }
            ensure_finite(k)?;
            sum += k.adjoint() * k;
        }
        let defect = hermitian_op_norm(&(sum - identity(dim_in)));
        if defect > tol::CHANNEL {
            return Err(Error::InvalidKraus(format!("completeness defect {defect:.3e}")));
        }
        Ok(KrausSet { dim_in, dim_out, operators })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Dimension of a square set.
    pub fn dim(&self) -> usize {
        self.dim_in
    }

    pub fn count(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// Appends zero operators up to `slots` entries.
    pub fn padded(&self, slots: usize) -> Result<KrausSet> {
        if slots < self.count() {
            return Err(Error::InvalidArgument(format!(
                "cannot pad {} Kraus operators into {slots} slots",
                self.count()
            )));
        }
        let mut operators = self.operators.clone();
        operators.resize(slots, CMatrix::zeros(self.dim_out, self.dim_in));
        Ok(KrausSet { dim_in: self.dim_in, dim_out: self.dim_out, operators })
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch("input state shape".into()));
        }
        Ok(self
            .operators
            .iter()
            .fold(CMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                acc + k * rho * k.adjoint()
            }))
    }
}

/// Anything that acts on matrices like a channel.
pub trait ChannelAction {
    fn apply_to(&self, rho: &CMatrix) -> Result<CMatrix>;
}

impl ChannelAction for ChoiMap {
    fn apply_to(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.apply(rho)
    }
}

impl ChannelAction for QuantumChannel {
    fn apply_to(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.apply(rho)
    }
}

impl ChannelAction for KrausSet {
    fn apply_to(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.apply(rho)
    }
}

pub fn apply_channel(ch: &impl ChannelAction, rho: &CMatrix) -> Result<CMatrix> {
    ch.apply_to(rho)
}

/// Kraus operators from the Choi eigendecomposition, ordered by
/// decreasing eigenvalue. Eigenpairs at or below `rank_tol` (default
/// `1e-12` times the largest eigenvalue) are dropped. The largest entry of
/// each operator is made real positive.
pub fn kraus_from_choi(ch: &QuantumChannel, rank_tol: Option<f64>) -> Result<KrausSet> {
    let (ni, no) = (ch.dim_in(), ch.dim_out());
    let eig = hermitian_eigen(ch.choi());
    let d = eig.values.len();
    let lambda_max = eig.values[d - 1];
    let threshold = rank_tol.unwrap_or(1e-12 * lambda_max.max(0.0));
    if eig.values[0] < -threshold {
        return Err(Error::NotCptp(format!(
            "Choi eigenvalue {:.3e} below -{threshold:.3e}",
            eig.values[0]
        )));
    }
    let mut operators = Vec::new();
    for idx in (0..d).rev() {
        let lambda = eig.values[idx];
        if lambda <= threshold {
            break;
        }
        let scale = lambda.sqrt();
        let mut k = CMatrix::from_fn(no, ni, |a, i| eig.vectors[(a * ni + i, idx)] * scale);
        fix_phase(&mut k);
        operators.push(k);
    }
    if operators.is_empty() {
        return Err(Error::NotCptp("Choi matrix has no positive eigenvalue".into()));
    }
    Ok(KrausSet { dim_in: ni, dim_out: no, operators })
}

fn fix_phase(k: &mut CMatrix) {
    let max = k.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return;
    }
    // row-major scan so the choice does not depend on storage order
    let (rows, cols) = k.shape();
    let pivot = (0..rows)
        .flat_map(|a| (0..cols).map(move |i| (a, i)))
        .map(|(a, i)| k[(a, i)])
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("maximum exists");
    let phase = pivot.conj() / pivot.norm();
    for z in k.iter_mut() {
        *z *= phase;
    }
}

pub fn choi_from_kraus(k: &KrausSet) -> Result<QuantumChannel> {
    QuantumChannel::new(ChoiMap::from_kraus_operators(&k.operators)?)
}

/// The `n²` matrix units `E_ik`, row-major.
pub fn basis_matrices(n: usize) -> Vec<CMatrix> {
    (0..n * n)
        .map(|r| {
            let mut e = CMatrix::zeros(n, n);
            e[(r / n, r % n)] = C64::new(1.0, 0.0);
            e
        })
        .collect()
}

/// Largest entrywise deviation between two actions over all matrix units.
pub fn action_distance(a: &impl ChannelAction, b: &impl ChannelAction, n: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for e in basis_matrices(n) {
        let diff = a.apply_to(&e)? - b.apply_to(&e)?;
        worst = worst.max(crate::linalg::max_abs_entry(&diff));
    }
    Ok(worst)
}

/// Projects onto the Hermitian part and clips negative Choi eigenvalues,
/// then restores trace preservation by adding `1 ⊗ Δ / n_out`. The two
/// steps alternate until both hold to `1e-13` (at most 100 rounds).
pub fn repair_cptp(map: &ChoiMap) -> ChoiMap {
    let (ni, no) = (map.dim_in, map.dim_out);
    let mut choi = hermitize(&map.choi);
    for _ in 0..100 {
        let eig = hermitian_eigen(&choi);
        if eig.values[0] < 0.0 {
            choi = eig.map_real(|v| v.max(0.0));
        }
        let tr = partial_trace_sys(&choi, no, ni).expect("shape");
        let delta = identity(ni) - tr;
        choi = hermitize(&(choi + identity(no).kronecker(&delta).unscale(no as f64)));
        let candidate = ChoiMap { dim_in: ni, dim_out: no, choi: choi.clone() };
        if validate_cptp(&candidate, 1e-13).pass {
            return candidate;
        }
    }
    ChoiMap { dim_in: ni, dim_out: no, choi }
}
