//! Diamond norm of Hermitian-preserving maps.
//!
//! The value comes from the semidefinite program
//!
//! ```text
//! max ⟨J, X₁ − X₂⟩  s.t.  X₁ + X₂ = 1_out ⊗ σ,  tr σ = 1,  X₁, X₂, σ ⪰ 0
//! min t             s.t.  Y ⪰ ±J,  t·1 ⪰ tr_out Y
//! ```
//!
//! whose dual objective is reported, so `value` is an upper bound. An
//! alternating ascent over pure input states gives an independent lower
//! bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sdp::{self, SdpOptions, SdpProblem, SdpStart};
use crate::channel::{maximally_entangled, ChoiMap, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitize, identity, max_abs_entry, CMatrix, CVector, C64};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondOptions {
    /// Random restarts of the pure-state ascent; `0` skips it.
    pub restarts: usize,
    pub seed: u64,
    pub sdp: SdpOptions,
    /// Converged means a final duality gap at most this times
    /// `max(1, ‖J‖_F)`.
    pub gap_tol: f64,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        DiamondOptions { restarts: 20, seed: 0x5eed_d1a3, sdp: SdpOptions::default(), gap_tol: 1e-7 }
    }
}

impl DiamondOptions {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondResult {
    pub value: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Diamond norm of the map with Choi matrix `map`. The Choi matrix must be
/// Hermitian (within `1e-10` relative).
pub fn diamond_norm(map: &ChoiMap, opts: &DiamondOptions) -> Result<DiamondResult> {
    let scale = map.choi().norm();
    if scale == 0.0 {
        return Ok(DiamondResult { value: 0.0, lower_bound: 0.0, gap: 0.0, iterations: 0, converged: true });
    }
    let herm = crate::linalg::hermiticity_defect(map.choi());
    if herm > 1e-10 * scale.max(1.0) {
        return Err(Error::NotHermitian { defect: herm });
    }
    let unit = ChoiMap::new(map.dim_in(), map.dim_out(), hermitize(map.choi()).unscale(scale))?;
    // absolute gap for small maps, relative for large ones
    let (sol, converged) = solve_sdp(&unit, &opts.sdp, opts.gap_tol * scale.max(1.0) / scale)?;
    let value = (sol.0 * scale).max(0.0);
    let primal = sol.1 * scale;
    let lower = if opts.restarts > 0 {
        pure_state_lower_bound(map, opts.restarts, opts.seed)
    } else {
        primal.max(0.0).min(value)
    };
    if lower > value + 1e-7 {
        return Err(Error::certification("diamond lower bound exceeds SDP value", None, lower, value + 1e-7));
    }
    Ok(DiamondResult { value, lower_bound: lower, gap: value - lower, iterations: sol.2, converged })
}

pub fn diamond_distance(a: &impl AsRef<ChoiMap>, b: &impl AsRef<ChoiMap>, opts: &DiamondOptions) -> Result<DiamondResult> {
    diamond_norm(&a.as_ref().sub(b.as_ref())?, opts)
}

/// Checks `‖Φ‖⋄ = 1` within `1e-6`; CPTP maps are contractive and trace
/// preserving, which forces the value.
pub fn cptp_diamond_unit(ch: &QuantumChannel, opts: &DiamondOptions) -> Result<DiamondResult> {
    let res = diamond_norm(ch.as_map(), opts)?;
    if (res.value - 1.0).abs() > 1e-6 {
        return Err(Error::certification("diamond norm of a channel", None, (res.value - 1.0).abs(), 1e-6));
    }
    Ok(res)
}

/// Returns `(dual objective, primal objective, iterations)` and whether the
/// gap met `gap_tol`.
fn solve_sdp(map: &ChoiMap, opts: &SdpOptions, gap_tol: f64) -> Result<((f64, f64, usize), bool)> {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let d = ni * no;
    let j = map.choi();
    let basis = hermitian_basis(d);
    let m = 1 + basis.len();

    let mut constraints: Vec<Vec<Option<CMatrix>>> = Vec::with_capacity(m);
    constraints.push(vec![None, None, Some(identity(ni))]);
    for h in &basis {
        let tr = crate::linalg::partial_trace_sys(h, no, ni).expect("shape");
        constraints.push(vec![Some(h.clone()), Some(h.clone()), Some(-tr)]);
    }
    let mut b = vec![0.0; m];
    b[0] = 1.0;
    let c = vec![j.clone(), -j.clone(), CMatrix::zeros(ni, ni)];
    let problem = SdpProblem::new(vec![d, d, ni], c, &constraints, b)?;

    // Strictly feasible start: Y = 2·1, t = 2·n_out + 1, σ = 1/n_in.
    let mut y = DVector::zeros(m);
    y[0] = 2.0 * no as f64 + 1.0;
    for p in 0..d {
        y[1 + p] = 2.0;
    }
    let two = identity(d).scale(2.0);
    let z = vec![&two - j, &two + j, identity(ni)];
    let x = vec![
        identity(d).unscale(2.0 * ni as f64),
        identity(d).unscale(2.0 * ni as f64),
        identity(ni).unscale(ni as f64),
    ];
    let sol = sdp::solve(&problem, Some(SdpStart { x, y, z }), opts)?;
    let converged = sol.gap().abs() <= gap_tol && sol.dual_residual <= 1e-8;
    Ok(((sol.dual_objective, sol.primal_objective, sol.iterations), converged))
}

/// Orthonormal basis of `d×d` Hermitian matrices: `E_pp` first, then the
/// real and imaginary off-diagonal pairs.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(p, p)] = C64::new(1.0, 0.0);
        out.push(e);
    }
    for p in 0..d {
        for q in (p + 1)..d {
            let mut re = CMatrix::zeros(d, d);
            re[(p, q)] = C64::new(s, 0.0);
            re[(q, p)] = C64::new(s, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(d, d);
            im[(p, q)] = C64::new(0.0, s);
            im[(q, p)] = C64::new(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// `(Δ ⊗ id)(|ψ⟩⟨ψ|)` for `ψ ∈ C^in ⊗ C^in`.
fn extended_output(map: &ChoiMap, psi: &CVector) -> CMatrix {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let p = CMatrix::from_fn(ni, ni, |i, l| psi[i * ni + l]);
    let left = identity(no).kronecker(&p.transpose());
    let right = identity(no).kronecker(&p.map(|z| z.conj()));
    hermitize(&(left * map.choi() * right))
}

/// `G` with `⟨S, (Δ⊗id)(ψψ†)⟩ = ψ† G ψ`.
fn pulled_back(map: &ChoiMap, s: &CMatrix) -> CMatrix {
    let (ni, no) = (map.dim_in(), map.dim_out());
    let j = map.choi();
    let r = ni;
    let d = ni * r;
    let mut g = CMatrix::zeros(d, d);
    for k in 0..ni {
        for l in 0..r {
            for i in 0..ni {
                for jj in 0..r {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..no {
                        for b in 0..no {
                            acc += s[(b * r + l, a * r + jj)] * j[(a * ni + i, b * ni + k)];
                        }
                    }
                    g[(k * r + l, i * r + jj)] = acc;
                }
            }
        }
    }
    hermitize(&g)
}

fn ascend(map: &ChoiMap, mut psi: CVector) -> f64 {
    let mut best = 0.0_f64;
    for _ in 0..500 {
        let out = extended_output(map, &psi);
        let eig = hermitian_eigen(&out);
        let value: f64 = eig.values.iter().map(|v| v.abs()).sum();
        if value <= best + 1e-15 * best.max(1.0) {
            best = best.max(value);
            break;
        }
        best = value;
        let sign = eig.map_real(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let g = hermitian_eigen(&pulled_back(map, &sign));
        let top = g.values.len() - 1;
        psi = g.vectors.column(top).into_owned();
    }
    best
}

/// `max ‖(Δ⊗id)(|ψ⟩⟨ψ|)‖₁` over pure states by alternating ascent from the
/// maximally entangled state and `restarts` seeded random states.
pub fn pure_state_lower_bound(map: &ChoiMap, restarts: usize, seed: u64) -> f64 {
    if max_abs_entry(map.choi()) == 0.0 {
        return 0.0;
    }
    let ni = map.dim_in();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = maximally_entangled(ni).unscale((ni as f64).sqrt());
    let mut best = ascend(map, omega);
    for _ in 0..restarts {
        let psi = crate::random::unit_vector(ni * ni, &mut rng);
        best = best.max(ascend(map, psi));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::KrausSet;
    use crate::random;

    #[test]
    fn zero_map_has_zero_norm() {
        let r = diamond_norm(&ChoiMap::zero(2, 2), &DiamondOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        let ch = random::channel(2, 2, &mut ChaCha8Rng::seed_from_u64(3));
        let r = diamond_distance(&ch, &ch, &DiamondOptions::default()).unwrap();
        assert!(r.value < 1e-9);
    }

    #[test]
    fn identity_channel_has_unit_norm() {
        let r = cptp_diamond_unit(&QuantumChannel::identity(2), &DiamondOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn amplitude_damping_has_unit_norm() {
        let g: f64 = 0.7;
        let mut k0 = CMatrix::zeros(2, 2);
        k0[(0, 0)] = C64::new(1.0, 0.0);
        k0[(1, 1)] = C64::new((1.0 - g).sqrt(), 0.0);
        let mut k1 = CMatrix::zeros(2, 2);
        k1[(0, 1)] = C64::new(g.sqrt(), 0.0);
        let ch = crate::channel::choi_from_kraus(&KrausSet::new(vec![k0, k1]).unwrap()).unwrap();
        cptp_diamond_unit(&ch, &DiamondOptions::default()).unwrap();
    }

    #[test]
    fn unitary_difference_matches_closed_form() {
        // ‖id − Ad_U‖⋄ = 2 sqrt(1 − min_{ρ} |tr ρU|²); for U = diag(1, e^{iθ}),
        // θ ≤ π, it equals 2 sin(θ/2).
        let theta: f64 = 1.1;
        let mut u = identity(2);
        u[(1, 1)] = C64::from_polar(1.0, theta);
        let ch = QuantumChannel::unitary(&crate::linalg::Unitary::new(u).unwrap());
        let r = diamond_distance(&QuantumChannel::identity(2), &ch, &DiamondOptions::default()).unwrap();
        let expect = 2.0 * (theta / 2.0).sin();
        assert!((r.value - expect).abs() < 1e-8, "{} vs {expect}", r.value);
        assert!((r.lower_bound - expect).abs() < 1e-8);
    }
}
