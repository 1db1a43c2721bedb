//! Multiparameter estimation toolbox: SLDs, QFIM, classical FIM, Uhlmann
//! curvature, scalar bounds, saturability checks, finite-difference oracle.

use crate::matrix::{
    inner, norm, outer, vec_norm, ComplexMatrix, HermitianOperator, MatrixError, NormKind,
    RealMatrix,
};
use crate::model::ParamPoint;
use crate::probes::{fix_phase, MixedState, ProbeError, PureState, QuantumState};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Centralized numerical tolerances.
pub mod tol {
    /// Hermiticity acceptance, relative.
    pub const HERMITICITY: f64 = 1e-12;
    /// Eigendecomposition residual, relative.
    pub const EIG_RESIDUAL: f64 = 1e-10;
    /// Degenerate-eigenvalue threshold, relative.
    pub const DEGENERACY: f64 = 1e-10;
    /// Eigenvalue-pair kernel cutoff for SLD/QFIM denominators.
    pub const KERNEL: f64 = 1e-12;
    /// Probability floor below which an outcome may be skipped.
    pub const PROB_FLOOR: f64 = 1e-14;
    /// Probability-derivative floor distinguishing a removable outcome from a
    /// divergent one.
    pub const DERIV_FLOOR: f64 = 1e-12;
    /// Support cutoff for density-matrix eigenvalues.
    pub const SUPPORT: f64 = 1e-12;
    /// QFIM kernel cutoff, relative to the operator norm.
    pub const QFIM_KERNEL: f64 = 1e-12;
    /// Derivative-bundle consistency checks.
    pub const BUNDLE: f64 = 1e-10;
}

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("bundle invariant violated: {0}")]
    InvalidBundle(String),
    #[error("operation requires a mixed-state bundle")]
    NeedMixed,
    #[error("operation requires a pure-state bundle")]
    NeedPure,
    #[error("degenerate ground state: gap {gap:.3e} below threshold")]
    DegenerateGround { gap: f64 },
    #[error("weight matrix is not positive definite")]
    WeightNotPositive,
    #[error("POVM does not resolve the identity (residual {0:.3e})")]
    NonResolvingPovm(f64),
    #[error("inconsistent lengths: {0}")]
    LengthMismatch(String),
    #[error("model evaluation failed: {0}")]
    ModelFailure(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivSource {
    Analytic,
    FiniteDifference,
    Perturbative,
}

/// A state together with its parameter derivatives.
///
/// Pure bundles keep the gauge ⟨ψ|∂ψ⟩ purely imaginary (perturbative source:
/// zero); mixed bundles carry Hermitian traceless ∂ρ.
#[derive(Clone, Debug)]
pub enum DerivativeBundle {
    Pure {
        psi: PureState,
        d_psi: Vec<Vec<C64>>,
        source: DerivSource,
    },
    Mixed {
        rho: MixedState,
        d_rho: Vec<ComplexMatrix>,
        source: DerivSource,
    },
}

impl DerivativeBundle {
    pub fn new_pure(
        psi: PureState,
        d_psi: Vec<Vec<C64>>,
        source: DerivSource,
    ) -> Result<Self, EstimationError> {
        for (mu, dp) in d_psi.iter().enumerate() {
            if dp.len() != psi.dim() {
                return Err(EstimationError::LengthMismatch(format!("d_psi[{mu}]")));
            }
            let overlap = inner(psi.vector(), dp);
            let scale = 1.0 + vec_norm(dp);
            if overlap.re.abs() > tol::BUNDLE * scale {
                return Err(EstimationError::InvalidBundle(format!(
                    "<psi|d_mu psi> not purely imaginary (Re = {:.3e})",
                    overlap.re
                )));
            }
            if source == DerivSource::Perturbative && overlap.im.abs() > tol::BUNDLE * scale {
                return Err(EstimationError::InvalidBundle(
                    "perturbative gauge requires <psi|d psi> = 0".into(),
                ));
            }
        }
        Ok(Self::Pure { psi, d_psi, source })
    }

    pub fn new_mixed(
        rho: MixedState,
        d_rho: Vec<ComplexMatrix>,
        source: DerivSource,
    ) -> Result<Self, EstimationError> {
        for (mu, dr) in d_rho.iter().enumerate() {
            let scale = 1.0 + dr.max_norm();
            if dr.hermiticity_residual() > tol::BUNDLE * scale {
                return Err(EstimationError::InvalidBundle(format!(
                    "d_rho[{mu}] not Hermitian"
                )));
            }
            if dr.trace().norm() > tol::BUNDLE * scale {
                return Err(EstimationError::InvalidBundle(format!(
                    "d_rho[{mu}] not traceless (trace {:.3e})",
                    dr.trace().norm()
                )));
            }
        }
        Ok(Self::Mixed { rho, d_rho, source })
    }

    pub fn n_params(&self) -> usize {
        match self {
            Self::Pure { d_psi, .. } => d_psi.len(),
            Self::Mixed { d_rho, .. } => d_rho.len(),
        }
    }

    pub fn state(&self) -> QuantumState {
        match self {
            Self::Pure { psi, .. } => QuantumState::Pure(psi.clone()),
            Self::Mixed { rho, .. } => QuantumState::Mixed(rho.clone()),
        }
    }

    /// ∂ρ matrices regardless of representation.
    pub fn d_rho_matrices(&self) -> Vec<ComplexMatrix> {
        match self {
            Self::Mixed { d_rho, .. } => d_rho.clone(),
            Self::Pure { psi, d_psi, .. } => d_psi
                .iter()
                .map(|dp| {
                    let a = outer(dp, psi.vector());
                    let b = outer(psi.vector(), dp);
                    a.add(&b)
                })
                .collect(),
        }
    }
}

/// Symmetric logarithmic derivatives in the state's eigenbasis, kernel-safe:
/// (L_mu)_{nm} = 2 (∂_mu ρ)_{nm} / (ρ_n + ρ_m), pairs with ρ_n + ρ_m below the
/// kernel cutoff set to zero.
pub fn sld(bundle: &DerivativeBundle) -> Result<Vec<HermitianOperator>, EstimationError> {
    let (pops, vecs) = bundle_eigendata(bundle)?;
    let n = pops.len();
    let d_rho = bundle.d_rho_matrices();
    let mut out = Vec::with_capacity(d_rho.len());
    for dr in &d_rho {
        let dr_eig = vecs.adjoint().matmul(&dr.matmul(&vecs));
        let mut l = ComplexMatrix::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let den = pops[a] + pops[b];
                if den > tol::KERNEL {
                    l[(a, b)] = dr_eig[(a, b)] * (2.0 / den);
                }
            }
        }
        let l_full = vecs.matmul(&l.matmul(&vecs.adjoint()));
        out.push(HermitianOperator::new_symmetrized(l_full)?);
    }
    Ok(out)
}

fn bundle_eigendata(
    bundle: &DerivativeBundle,
) -> Result<(Vec<f64>, ComplexMatrix), EstimationError> {
    match bundle {
        DerivativeBundle::Mixed { rho, .. } => {
            let (w, v) = rho.eigendata();
            Ok((w.to_vec(), v.clone()))
        }
        DerivativeBundle::Pure { psi, .. } => {
            // rank-1 eigendata: psi plus an orthonormal completion
            let n = psi.dim();
            let mut cols: Vec<Vec<C64>> = vec![psi.vector().to_vec()];
            for i in 0..n {
                if cols.len() == n {
                    break;
                }
                let mut v = vec![C64::new(0.0, 0.0); n];
                v[i] = C64::new(1.0, 0.0);
                for c in &cols {
                    let ov = inner(c, &v);
                    for (x, y) in v.iter_mut().zip(c) {
                        *x -= ov * y;
                    }
                }
                let nn = vec_norm(&v);
                if nn > 1e-8 {
                    for x in v.iter_mut() {
                        *x /= nn;
                    }
                    cols.push(v);
                }
            }
            let vecs = ComplexMatrix::from_fn(n, |i, j| cols[j][i]);
            let mut pops = vec![0.0; n];
            pops[0] = 1.0;
            Ok((pops, vecs))
        }
    }
}

/// QFIM. Mixed states use the spectral form of the SLD-based expression with
/// kernel-safe term dropping; pure states use
/// Q = 4 Re[⟨∂ψ|∂ψ⟩ + ⟨∂ψ|ψ⟩⟨∂ψ|ψ⟩] (equal to the standard convention since
/// ⟨∂ψ|ψ⟩ = −⟨ψ|∂ψ⟩ in the accepted gauge).
pub fn qfim(bundle: &DerivativeBundle) -> Result<RealMatrix, EstimationError> {
    match bundle {
        DerivativeBundle::Pure { psi, d_psi, .. } => {
            let d = d_psi.len();
            Ok(RealMatrix::from_fn(d, |m, n| {
                let t1 = inner(&d_psi[m], &d_psi[n]);
                let t2 = inner(&d_psi[m], psi.vector()) * inner(&d_psi[n], psi.vector());
                4.0 * (t1 + t2).re
            }))
        }
        DerivativeBundle::Mixed { rho, d_rho, .. } => {
            let (pops, vecs) = rho.eigendata();
            let n = pops.len();
            let d = d_rho.len();
            let dr_eig: Vec<ComplexMatrix> = d_rho
                .iter()
                .map(|m| vecs.adjoint().matmul(&m.matmul(vecs)))
                .collect();
            Ok(RealMatrix::from_fn(d, |mu, nu| {
                let mut q = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let den = pops[a] + pops[b];
                        if den > tol::KERNEL {
                            q += 2.0 * (dr_eig[mu][(a, b)] * dr_eig[nu][(b, a)]).re / den;
                        }
                    }
                }
                q
            }))
        }
    }
}

/// Ground-state QFIM from the Hamiltonian and its derivatives only:
/// Q_{μν} = 4 Σ_{n≥1} Re[⟨E0|∂_μH|E_n⟩⟨E_n|∂_νH|E0⟩] / (E0 − E_n)².
pub fn qfim_ground_state(
    h: &HermitianOperator,
    dh: &[HermitianOperator],
) -> Result<RealMatrix, EstimationError> {
    let spec = h.spectrum();
    let scale = 1.0 + h.operator_norm();
    let gap = spec.eigenvalues[1] - spec.eigenvalues[0];
    if gap < tol::DEGENERACY * scale {
        return Err(EstimationError::DegenerateGround { gap });
    }
    let n = h.dim();
    let d = dh.len();
    let dh_eig: Vec<ComplexMatrix> = dh.iter().map(|m| spec.to_eigenbasis(m.matrix())).collect();
    Ok(RealMatrix::from_fn(d, |mu, nu| {
        let mut q = 0.0;
        for k in 1..n {
            let de = spec.eigenvalues[0] - spec.eigenvalues[k];
            q += 4.0 * (dh_eig[mu][(0, k)] * dh_eig[nu][(k, 0)]).re / (de * de);
        }
        q
    }))
}

/// Classical Fisher information matrix of an outcome distribution.
///
/// Outcomes with p < PROB_FLOOR are skipped only when every derivative is
/// below DERIV_FLOOR; otherwise the affected entries diverge (+infinity).
pub fn fim_povm(probs: &[f64], dprobs: &[Vec<f64>]) -> Result<RealMatrix, EstimationError> {
    if probs.len() != dprobs.len() {
        return Err(EstimationError::LengthMismatch(
            "probs vs dprobs outcome count".into(),
        ));
    }
    let d = dprobs.first().map_or(0, |v| v.len());
    if dprobs.iter().any(|v| v.len() != d) {
        return Err(EstimationError::LengthMismatch("derivative arity".into()));
    }
    let psum: f64 = probs.iter().sum();
    if probs.iter().any(|p| *p < -1e-10) || (psum - 1.0).abs() > 1e-10 {
        return Err(EstimationError::InvalidBundle(format!(
            "probabilities must be nonnegative and sum to 1 (sum {psum})"
        )));
    }
    let mut f = RealMatrix::zeros(d);
    for (k, p) in probs.iter().enumerate() {
        if *p < tol::PROB_FLOOR {
            if dprobs[k].iter().all(|dp| dp.abs() < tol::DERIV_FLOOR) {
                continue;
            }
            for mu in 0..d {
                if dprobs[k][mu].abs() >= tol::DERIV_FLOOR {
                    for nu in 0..d {
                        f[(mu, nu)] = f64::INFINITY;
                        f[(nu, mu)] = f64::INFINITY;
                    }
                }
            }
            continue;
        }
        for mu in 0..d {
            for nu in 0..d {
                f[(mu, nu)] += dprobs[k][mu] * dprobs[k][nu] / p;
            }
        }
    }
    Ok(f)
}

/// Mean Uhlmann curvature D_{μν} = −(i/2) Tr[ρ [L_μ, L_ν]]; real antisymmetric.
pub fn uhlmann_curvature(
    state: &QuantumState,
    slds: &[HermitianOperator],
) -> Result<RealMatrix, EstimationError> {
    let rho = state.density_matrix();
    let d = slds.len();
    Ok(RealMatrix::from_fn(d, |m, n| {
        if m == n {
            return 0.0;
        }
        let comm = slds[m].matrix().commutator(slds[n].matrix());
        let tr = rho.matmul(&comm).trace();
        // −(i/2) tr: real part of the result is (1/2) Im tr
        0.5 * tr.im
    }))
}

/// Scalar bounds derived from (Q, D, W).
#[derive(Clone, Debug)]
pub struct BoundsReport {
    /// C^S = Tr[W Q^{-1}] (+infinity when W weights a Q-kernel direction).
    pub cs: f64,
    /// Upper bound on the HCRB: C^S + ‖√W Q⁻¹ D Q⁻¹ √W‖₁.
    pub ch_bar: f64,
    /// Asymptotic incompatibility, clipped to [0, 1].
    pub r: f64,
    /// 1 / Tr[W0 Q^{-1}], W0 = diag(1/λ_μ²); absent when any λ_μ = 0 or Q singular.
    pub msnr_bar: Option<f64>,
    /// Per-parameter estimability (false for Q-kernel directions).
    pub estimable: Vec<bool>,
    /// C^S restricted to the estimable sub-block (equals `cs` when all true).
    pub cs_estimable: f64,
}

/// Computes C^S, C̄^H, R and the mSNR bound.
///
/// Singular-QFIM policy: directions with Q-eigenvalue below
/// QFIM_KERNEL · ‖Q‖_op are treated as non-estimable; if W weights such a
/// direction, C^S = +infinity and the sub-block bound is reported separately.
pub fn bounds(
    q: &RealMatrix,
    d_uc: &RealMatrix,
    w: &RealMatrix,
    lambdas: Option<&[f64]>,
) -> Result<BoundsReport, EstimationError> {
    let n = q.dim();
    let (wq_eigs, _) = w.sym_eigen()?;
    if wq_eigs.iter().any(|e| *e <= 0.0) {
        return Err(EstimationError::WeightNotPositive);
    }
    let (evals, evecs) = q.sym_eigen()?;
    let qnorm = evals.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let cutoff = tol::QFIM_KERNEL * qnorm.max(f64::MIN_POSITIVE);
    let kept: Vec<bool> = evals.iter().map(|e| *e > cutoff).collect();

    // pseudo-inverse and kernel projector
    let pinv = RealMatrix::from_fn(n, |i, j| {
        (0..n)
            .filter(|&k| kept[k])
            .map(|k| evecs[(i, k)] * evecs[(j, k)] / evals[k])
            .sum()
    });
    let kernel_weighted = (0..n).any(|k| {
        if kept[k] {
            return false;
        }
        let vk: Vec<f64> = (0..n).map(|i| evecs[(i, k)]).collect();
        let wv: f64 = (0..n)
            .map(|i| (0..n).map(|j| vk[i] * w[(i, j)] * vk[j]).sum::<f64>())
            .sum();
        wv > 1e-14
    });

    let cs_estimable = w.matmul(&pinv).trace();
    let cs = if kernel_weighted { f64::INFINITY } else { cs_estimable };

    // estimability per parameter axis: e_mu inside the kept subspace
    let estimable: Vec<bool> = (0..n)
        .map(|mu| {
            let resid: f64 = (0..n)
                .filter(|&k| !kept[k])
                .map(|k| evecs[(mu, k)] * evecs[(mu, k)])
                .sum();
            resid < 1e-10
        })
        .collect();

    // ch_bar = cs + ||sqrtW pinv D pinv sqrtW||_1
    let sqw = w.sym_sqrt()?;
    let t = sqw.matmul(&pinv.matmul(&d_uc.matmul(&pinv.matmul(&sqw))));
    let tnorm = trace_norm_real(&t)?;
    let ch_bar = cs + tnorm;

    // R = max |eig(i Q^+ D)| via the antisymmetric similarity Q^{-1/2} D Q^{-1/2}
    let pinv_sqrt = RealMatrix::from_fn(n, |i, j| {
        (0..n)
            .filter(|&k| kept[k])
            .map(|k| evecs[(i, k)] * evecs[(j, k)] / evals[k].sqrt())
            .sum()
    });
    let a = pinv_sqrt.matmul(&d_uc.matmul(&pinv_sqrt));
    let r_raw = antisymmetric_spectral_norm(&a)?;
    let r = r_raw.clamp(0.0, 1.0);

    let msnr_bar = lambdas.and_then(|ls| {
        if ls.len() != n || ls.iter().any(|l| *l == 0.0) || kernel_weighted {
            return None;
        }
        let w0 = RealMatrix::from_fn(n, |i, j| if i == j { 1.0 / (ls[i] * ls[i]) } else { 0.0 });
        let denom = w0.matmul(&pinv).trace();
        if kept.iter().all(|k| *k) {
            Some(1.0 / denom)
        } else {
            None
        }
    });

    Ok(BoundsReport { cs, ch_bar, r, msnr_bar, estimable, cs_estimable })
}

/// Trace norm of a small real matrix (via its complex embedding).
fn trace_norm_real(t: &RealMatrix) -> Result<f64, EstimationError> {
    let n = t.dim();
    let c = ComplexMatrix::from_fn(n, |i, j| C64::new(t[(i, j)], 0.0));
    Ok(norm(&c, NormKind::Trace)?)
}

/// Largest singular value of a (numerically) antisymmetric real matrix.
fn antisymmetric_spectral_norm(a: &RealMatrix) -> Result<f64, EstimationError> {
    let n = a.dim();
    let anti = RealMatrix::from_fn(n, |i, j| 0.5 * (a[(i, j)] - a[(j, i)]));
    let ata = anti.transpose().matmul(&anti);
    let (evals, _) = ata.sym_eigen()?;
    Ok(evals.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt())
}

/// Partial commutativity condition residual:
/// max_{μ<ν} ‖P_supp [L_μ, L_ν] P_supp‖_max with P_supp the support projector.
pub fn check_pcc(
    state: &QuantumState,
    slds: &[HermitianOperator],
) -> Result<f64, EstimationError> {
    let (pops, vecs): (Vec<f64>, ComplexMatrix) = match state {
        QuantumState::Mixed(m) => {
            let (w, v) = m.eigendata();
            (w.to_vec(), v.clone())
        }
        QuantumState::Pure(p) => {
            let b = DerivativeBundle::Pure {
                psi: p.clone(),
                d_psi: vec![],
                source: DerivSource::Analytic,
            };
            bundle_eigendata(&b)?
        }
    };
    let support: Vec<usize> = pops
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > tol::SUPPORT)
        .map(|(i, _)| i)
        .collect();
    let mut res: f64 = 0.0;
    for m in 0..slds.len() {
        for n in (m + 1)..slds.len() {
            let comm = slds[m].matrix().commutator(slds[n].matrix());
            let ce = vecs.adjoint().matmul(&comm.matmul(&vecs));
            for &a in &support {
                for &b in &support {
                    res = res.max(ce[(a, b)].norm());
                }
            }
        }
    }
    Ok(res)
}

/// Reality-of-probe-and-derivatives residual: after the deterministic phase
/// fix, the max |Im| component of ψ and of each ∂ψ in the perturbative gauge.
pub fn check_rpd(bundle: &DerivativeBundle) -> Result<f64, EstimationError> {
    let DerivativeBundle::Pure { psi, d_psi, .. } = bundle else {
        return Err(EstimationError::NeedPure);
    };
    // deterministic global phase on psi, carried onto the derivatives
    let mut v = psi.vector().to_vec();
    let before = v.clone();
    fix_phase(&mut v);
    // recover the rotation applied
    let mut rot = C64::new(1.0, 0.0);
    for (a, b) in before.iter().zip(&v) {
        if a.norm() > 1e-12 {
            rot = b / a;
            break;
        }
    }
    let mut res: f64 = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    for dp in d_psi {
        // perturbative gauge: remove the ⟨ψ|∂ψ⟩ component, then rotate
        let ov = inner(psi.vector(), dp);
        for (i, z) in dp.iter().enumerate() {
            let gauged = (z - ov * psi.vector()[i]) * rot;
            res = res.max(gauged.im.abs());
        }
    }
    Ok(res)
}

/// Saturability check for a projective measurement on a pure model.
/// Returns (residual over projectors non-orthogonal to ψ, residual over
/// orthogonal ones).
pub fn check_scpm(
    bundle: &DerivativeBundle,
    pom: &[Vec<C64>],
) -> Result<(f64, f64), EstimationError> {
    let DerivativeBundle::Pure { psi, d_psi, .. } = bundle else {
        return Err(EstimationError::NeedPure);
    };
    let n = psi.dim();
    // resolution of identity
    let mut resolve = ComplexMatrix::identity(n);
    for pk in pom {
        resolve = resolve.sub(&outer(pk, pk));
    }
    let rres = resolve.max_norm();
    if rres > 1e-10 {
        return Err(EstimationError::NonResolvingPovm(rres));
    }

    let orth_cut = 1e-10;
    let mut res_nonorth: f64 = 0.0;
    let mut res_orth: f64 = 0.0;
    for pk in pom {
        let ov = inner(psi.vector(), pk); // ⟨ψ|π_k⟩
        if ov.norm() > orth_cut {
            for dp in d_psi {
                let lhs = (inner(dp, pk) * ov.conj()).im; // Im ⟨∂ψ|π⟩⟨π|ψ⟩
                let rhs = ov.norm_sqr() * inner(dp, psi.vector()).im;
                res_nonorth = res_nonorth.max((lhs - rhs).abs());
            }
        } else {
            for dm in d_psi {
                for dn in d_psi {
                    let v = (inner(dm, pk) * inner(pk, dn)).im;
                    res_orth = res_orth.max(v.abs());
                }
            }
        }
    }
    Ok((res_nonorth, res_orth))
}

/// Analytic pure bundle for the ground state of H(λ): first-order
/// perturbation-theory derivatives (perturbative gauge, ⟨ψ|∂ψ⟩ = 0).
/// Fails on a degenerate ground state.
pub fn ground_state_bundle(
    p: &ParamPoint,
    consts: &crate::model::PhysicalConstants,
) -> Result<DerivativeBundle, EstimationError> {
    let h = crate::model::build_hamiltonian(p, consts);
    let spec = h.spectrum();
    let scale = 1.0 + h.operator_norm();
    let gap = spec.eigenvalues[1] - spec.eigenvalues[0];
    if gap < tol::DEGENERACY * scale {
        return Err(EstimationError::DegenerateGround { gap });
    }
    let (gs, _) = crate::probes::ground_state(&h)?;
    let n = h.dim();
    let dh = crate::model::build_dh_all();
    // phase fixing rotated the raw eigenvector; carry the same phase
    let v0 = spec.eigenvector(0);
    let rot = inner(&v0, gs.vector());
    let d_psi: Vec<Vec<C64>> = dh
        .iter()
        .map(|op| {
            let me = spec.to_eigenbasis(op.matrix());
            let mut dp = vec![C64::new(0.0, 0.0); n];
            for k in 1..n {
                let coef = me[(k, 0)] / (spec.eigenvalues[0] - spec.eigenvalues[k]);
                let vk = spec.eigenvector(k);
                for i in 0..n {
                    dp[i] += coef * vk[i];
                }
            }
            dp.into_iter().map(|z| z * rot).collect()
        })
        .collect();
    DerivativeBundle::new_pure(gs, d_psi, DerivSource::Perturbative)
}

/// Analytic derivative bundle for the stationary thermal state of H(λ):
/// ∂ρ from the exponential-family identity ∂ρ·ρ^{-1} = f(Γ_G)(∂_μG) with
/// f(x) = (e^x − 1)/x, evaluated in the eigenbasis of G = −βH − ln Z.
pub fn thermal_bundle(
    p: &ParamPoint,
    temperature: f64,
    consts: &crate::model::PhysicalConstants,
) -> Result<DerivativeBundle, EstimationError> {
    let h = crate::model::build_hamiltonian(p, consts);
    let rho = crate::probes::thermal_state(&h, temperature)?;
    let spec = h.spectrum();
    let beta = 1.0 / temperature;
    let pops = crate::probes::thermal_populations(spec, temperature);
    let g: Vec<f64> = pops.iter().map(|x| x.max(1e-300).ln()).collect();
    let dh = crate::model::build_dh_all();
    let n = h.dim();
    let mut d_rho = Vec::new();
    for op in &dh {
        let m = spec.to_eigenbasis(op.matrix());
        let dlogz: f64 = -beta
            * pops
                .iter()
                .enumerate()
                .map(|(k, pk)| pk * m[(k, k)].re)
                .sum::<f64>();
        let mut dr = ComplexMatrix::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let dg = if a == b {
                    C64::new(-beta * m[(a, b)].re - dlogz, 0.0)
                } else {
                    m[(a, b)] * (-beta)
                };
                let gap = g[a] - g[b];
                let f = if gap.abs() < 1e-12 {
                    1.0 + gap / 2.0
                } else {
                    (gap.exp() - 1.0) / gap
                };
                dr[(a, b)] = dg * f * pops[b];
            }
        }
        d_rho.push(spec.from_eigenbasis(&dr));
    }
    DerivativeBundle::new_mixed(rho, d_rho, DerivSource::Analytic)
}

pub type ModelFn<'a> = dyn Fn(&ParamPoint) -> Result<QuantumState, EstimationError> + 'a;

/// Central-difference derivative bundle. Pure states are gauge-aligned (the
/// displaced state's phase rotated to maximize overlap with the center state)
/// before differencing.
pub fn fd_derivatives(
    model: &ModelFn,
    p: &ParamPoint,
    step: f64,
) -> Result<DerivativeBundle, EstimationError> {
    let center = model(p)?;
    match center {
        QuantumState::Pure(psi0) => {
            let mut d_psi = Vec::with_capacity(3);
            for mu in 1..=3 {
                let h = step * (1.0 + p.get(mu).abs());
                let plus = model(&p.with_component(mu, p.get(mu) + h))?;
                let minus = model(&p.with_component(mu, p.get(mu) - h))?;
                let (QuantumState::Pure(pp), QuantumState::Pure(pm)) = (plus, minus) else {
                    return Err(EstimationError::ModelFailure(
                        "model changed purity between evaluations".into(),
                    ));
                };
                let vp = gauge_align(psi0.vector(), pp.vector());
                let vm = gauge_align(psi0.vector(), pm.vector());
                let mut d: Vec<C64> = vp
                    .iter()
                    .zip(&vm)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                // the exact derivative has Re<psi|d psi> = 0 (norm preservation);
                // remove the O(h^2) differencing artifact
                let re_ov = inner(psi0.vector(), &d).re;
                for (x, y) in d.iter_mut().zip(psi0.vector()) {
                    *x -= re_ov * y;
                }
                d_psi.push(d);
            }
            DerivativeBundle::new_pure(psi0, d_psi, DerivSource::FiniteDifference)
        }
        QuantumState::Mixed(rho0) => {
            let mut d_rho = Vec::with_capacity(3);
            for mu in 1..=3 {
                let h = step * (1.0 + p.get(mu).abs());
                let plus = model(&p.with_component(mu, p.get(mu) + h))?;
                let minus = model(&p.with_component(mu, p.get(mu) - h))?;
                let mut d = plus
                    .density_matrix()
                    .sub(&minus.density_matrix())
                    .scale(C64::new(0.5 / h, 0.0));
                // exact derivative is traceless; remove the eps/h drift
                let n = d.dim();
                let tr = d.trace() / n as f64;
                for i in 0..n {
                    d[(i, i)] -= tr;
                }
                d_rho.push(d);
            }
            DerivativeBundle::new_mixed(rho0, d_rho, DerivSource::FiniteDifference)
        }
    }
}

/// Rotate `v`'s global phase so that ⟨anchor|v⟩ is real positive.
pub fn gauge_align(anchor: &[C64], v: &[C64]) -> Vec<C64> {
    let ov = inner(anchor, v);
    if ov.norm() < 1e-300 {
        return v.to_vec();
    }
    let rot = ov.conj() / ov.norm();
    v.iter().map(|z| z * rot).collect()
}

/// Full report for a model point: QFIM, Uhlmann curvature, bounds and
/// compatibility residuals from a derivative bundle.
#[derive(Clone, Debug)]
pub struct EstimationReport {
    pub qfim: RealMatrix,
    pub uhlmann: RealMatrix,
    pub cs: f64,
    pub ch_bar: f64,
    pub ch: Option<f64>,
    pub r: f64,
    pub msnr_bar: Option<f64>,
    pub wcc_residual: f64,
    pub pcc_residual: f64,
    pub rpd_residual: Option<f64>,
    pub estimable: Vec<bool>,
}

pub fn full_report(
    bundle: &DerivativeBundle,
    w: &RealMatrix,
    lambdas: Option<&[f64]>,
) -> Result<EstimationReport, EstimationError> {
    let q = qfim(bundle)?;
    let ls = sld(bundle)?;
    let state = bundle.state();
    let d = uhlmann_curvature(&state, &ls)?;
    let b = bounds(&q, &d, w, lambdas)?;
    let pcc = check_pcc(&state, &ls)?;
    let rpd = match bundle {
        DerivativeBundle::Pure { .. } => Some(check_rpd(bundle)?),
        DerivativeBundle::Mixed { .. } => None,
    };
    Ok(EstimationReport {
        qfim: q,
        uhlmann: d.clone(),
        cs: b.cs,
        ch_bar: b.ch_bar,
        ch: None,
        r: b.r,
        msnr_bar: b.msnr_bar,
        wcc_residual: d.max_abs(),
        pcc_residual: pcc,
        rpd_residual: rpd,
        estimable: b.estimable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_dh_all, build_hamiltonian, default_constants, lambdas_from_fields, FieldSpec,
    };
    use crate::probes::{ground_state, named_probe, thermal_state, ProbeId};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn thermal_bundle(p: &ParamPoint, temperature: f64) -> Result<DerivativeBundle, EstimationError> {
        super::thermal_bundle(p, temperature, &default_constants())
    }

    fn ground_bundle(p: &ParamPoint) -> DerivativeBundle {
        // perturbative-gauge derivatives from first-order perturbation theory
        let consts = default_constants();
        let h = build_hamiltonian(p, &consts);
        let spec = h.spectrum();
        let dh = build_dh_all();
        let (gs, deg) = ground_state(&h).unwrap();
        assert!(!deg);
        // rotate eigenvector 0 to match the phase-fixed gs
        let d_psi: Vec<Vec<C64>> = dh
            .iter()
            .map(|op| {
                let me = spec.to_eigenbasis(op.matrix());
                let mut dp = vec![c(0.0); 8];
                for k in 1..8 {
                    let coef = me[(k, 0)] / (spec.eigenvalues[0] - spec.eigenvalues[k]);
                    let vk = spec.eigenvector(k);
                    for i in 0..8 {
                        dp[i] += coef * vk[i];
                    }
                }
                dp
            })
            .collect();
        // still must align the derivative gauge with gs's fixed phase
        let v0 = spec.eigenvector(0);
        let rot = inner(&v0, gs.vector());
        let d_psi = d_psi
            .into_iter()
            .map(|dp| dp.into_iter().map(|z| z * rot).collect())
            .collect();
        DerivativeBundle::new_pure(gs, d_psi, DerivSource::Perturbative).unwrap()
    }

    #[test]
    fn sld_isotropic_denominator() {
        // rho = I/8, d rho = traceless Hermitian X  =>  L = 8 X
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = ComplexMatrix::from_fn(8, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut x = raw.add(&raw.adjoint()).scale(c(0.5));
        let tr = x.trace().re / 8.0;
        for i in 0..8 {
            x[(i, i)] -= c(tr);
        }
        let rho = MixedState::new(ComplexMatrix::identity(8).scale(c(0.125))).unwrap();
        let bundle =
            DerivativeBundle::new_mixed(rho, vec![x.clone()], DerivSource::Analytic).unwrap();
        let l = sld(&bundle).unwrap();
        assert!(l[0].matrix().sub(&x.scale(c(8.0))).max_norm() < 1e-10);
    }

    #[test]
    fn sld_pure_rank1_form() {
        let p = ParamPoint::new(0.04, 0.17, 0.12);
        let bundle = ground_bundle(&p);
        let DerivativeBundle::Pure { psi, d_psi, .. } = &bundle else { unreachable!() };
        let ls = sld(&bundle).unwrap();
        for (l, dp) in ls.iter().zip(d_psi) {
            let expect = outer(dp, psi.vector())
                .add(&outer(psi.vector(), dp))
                .scale(c(2.0));
            assert!(l.matrix().sub(&expect).max_norm() < 1e-9);
        }
    }

    #[test]
    fn sld_definition_residual_on_support() {
        let p = ParamPoint::new(0.03, 0.12, 0.2);
        let bundle = thermal_bundle(&p, 0.08).unwrap();
        let ls = sld(&bundle).unwrap();
        let rho = bundle.state().density_matrix();
        for (l, dr) in ls.iter().zip(bundle.d_rho_matrices()) {
            let recon = l
                .matrix()
                .matmul(&rho)
                .add(&rho.matmul(l.matrix()))
                .scale(c(0.5));
            assert!(recon.sub(&dr).max_norm() < 1e-9);
        }
    }

    #[test]
    fn qfim_zero_for_constant_model() {
        let rho = MixedState::new(ComplexMatrix::identity(8).scale(c(0.125))).unwrap();
        let z = ComplexMatrix::zeros(8);
        let bundle =
            DerivativeBundle::new_mixed(rho, vec![z.clone(), z.clone(), z], DerivSource::Analytic)
                .unwrap();
        let q = qfim(&bundle).unwrap();
        assert!(q.max_abs() < 1e-15);
    }

    #[test]
    fn aligned_ground_state_qfim() {
        let consts = default_constants();
        let l2 = 0.23;
        let p = ParamPoint::new(0.06, l2, 0.0);
        let h = build_hamiltonian(&p, &consts);
        let q = qfim_ground_state(&h, &build_dh_all()).unwrap();
        // λ1 row/column identically zero
        for j in 0..3 {
            assert!(q[(0, j)].abs() < 1e-12 && q[(j, 0)].abs() < 1e-12);
        }
        let pp = 25.0 * consts.delta.powi(2) + 36.0 * l2 * l2;
        let expect = 900.0 * consts.delta.powi(2) / (pp * pp);
        assert!(
            (q[(1, 1)] - expect).abs() < 1e-8 * expect,
            "{} vs {}",
            q[(1, 1)],
            expect
        );
    }

    #[test]
    fn qfim_ground_state_matches_fd_bundle() {
        let consts = default_constants();
        let p = ParamPoint::new(0.05, 0.14, 0.21);
        let h = build_hamiltonian(&p, &consts);
        let q1 = qfim_ground_state(&h, &build_dh_all()).unwrap();
        let model = |pt: &ParamPoint| -> Result<QuantumState, EstimationError> {
            let h = build_hamiltonian(pt, &default_constants());
            let (gs, _) = ground_state(&h)?;
            Ok(QuantumState::Pure(gs))
        };
        let lam_scale = 1.0;
        let bundle = fd_derivatives(&model, &p, 1e-5 * lam_scale).unwrap();
        let q2 = qfim(&bundle).unwrap();
        let rel = q1.sub(&q2).max_abs() / q1.max_abs();
        assert!(rel < 1e-6, "rel {rel}");
    }

    #[test]
    fn qfim_ground_state_rejects_degenerate() {
        let consts = default_constants();
        let h = build_hamiltonian(&ParamPoint::new(0.0, 0.0, 0.0), &consts);
        assert!(matches!(
            qfim_ground_state(&h, &build_dh_all()),
            Err(EstimationError::DegenerateGround { .. })
        ));
    }

    #[test]
    fn qfim_zero_dh() {
        let consts = default_constants();
        let h = build_hamiltonian(&ParamPoint::new(0.05, 0.14, 0.21), &consts);
        let z = HermitianOperator::new(ComplexMatrix::zeros(8)).unwrap();
        let q = qfim_ground_state(&h, &[z.clone(), z.clone(), z]).unwrap();
        assert!(q.max_abs() == 0.0);
    }

    #[test]
    fn fim_zero_for_flat_distribution() {
        let f = fim_povm(&[0.5, 0.5], &[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert!(f.max_abs() == 0.0);
    }

    #[test]
    fn fim_divergence_flagged() {
        let f = fim_povm(&[1.0, 0.0], &[vec![1e-3, 0.0, 0.0], vec![-1e-3, 0.0, 0.0]]).unwrap();
        assert!(f[(0, 0)].is_infinite());
    }

    #[test]
    fn fim_sld_eigenbasis_saturates_single_param() {
        // single-parameter model: measure in the SLD eigenbasis -> F = Q
        let p = ParamPoint::new(0.03, 0.12, 0.2);
        let bundle = thermal_bundle(&p, 0.06).unwrap();
        let ls = sld(&bundle).unwrap();
        let q = qfim(&bundle).unwrap();
        let l0 = &ls[0];
        let spec = l0.spectrum();
        let rho = bundle.state().density_matrix();
        let dr = &bundle.d_rho_matrices()[0];
        let mut probs = Vec::new();
        let mut dprobs = Vec::new();
        for k in 0..8 {
            let vk = spec.eigenvector(k);
            let pk = inner(&vk, &rho.apply(&vk)).re.max(0.0);
            let dpk = inner(&vk, &dr.apply(&vk)).re;
            probs.push(pk);
            dprobs.push(vec![dpk]);
        }
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        let f = fim_povm(&probs, &dprobs).unwrap();
        assert!((f[(0, 0)] - q[(0, 0)]).abs() < 1e-8 * q[(0, 0)].max(1.0));
    }

    #[test]
    fn fim_bounded_by_qfim_random_povms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = ParamPoint::new(0.04, 0.1, 0.15);
        let bundle = thermal_bundle(&p, 0.05).unwrap();
        let q = qfim(&bundle).unwrap();
        let rho = bundle.state().density_matrix();
        let drs = bundle.d_rho_matrices();
        for _ in 0..100 {
            // random orthonormal basis from a random Hermitian's eigenvectors
            let raw = ComplexMatrix::from_fn(8, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let h = HermitianOperator::new_symmetrized(raw).unwrap();
            let spec = h.spectrum();
            let mut probs = Vec::new();
            let mut dprobs = Vec::new();
            for k in 0..8 {
                let vk = spec.eigenvector(k);
                probs.push(inner(&vk, &rho.apply(&vk)).re.max(0.0));
                dprobs.push(drs.iter().map(|d| inner(&vk, &d.apply(&vk)).re).collect());
            }
            let tot: f64 = probs.iter().sum();
            for p in probs.iter_mut() {
                *p /= tot;
            }
            let f = fim_povm(&probs, &dprobs).unwrap();
            let diff = q.sub(&f);
            let (evals, _) = diff.sym_eigen().unwrap();
            assert!(evals[0] > -1e-8 * q.max_abs(), "Loewner violation {}", evals[0]);
        }
    }

    #[test]
    fn uhlmann_zero_for_stationary_thermal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let consts = default_constants();
        for _ in 0..20 {
            let f = FieldSpec::new(
                rng.gen_range(100.0..1000.0),
                rng.gen_range(1.0..10.0),
                rng.gen_range(0.0..std::f64::consts::PI),
            )
            .unwrap();
            let p = lambdas_from_fields(&f, &consts);
            let t = rng.gen_range(1e-3..1.0);
            let bundle = thermal_bundle(&p, t).unwrap();
            let ls = sld(&bundle).unwrap();
            let d = uhlmann_curvature(&bundle.state(), &ls).unwrap();
            assert!(d.max_abs() <= 1e-10, "WCC violated: {}", d.max_abs());
        }
    }

    #[test]
    fn pcc_zero_for_duplicated_single_param() {
        let p = ParamPoint::new(0.03, 0.12, 0.2);
        let bundle = thermal_bundle(&p, 0.06).unwrap();
        let ls = sld(&bundle).unwrap();
        let dup = vec![ls[0].clone(), ls[0].clone()];
        let r = check_pcc(&bundle.state(), &dup).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn pcc_violated_for_thermal_model() {
        let consts = default_constants();
        let f = FieldSpec::new(400.0, 5.0, 1.1).unwrap();
        let p = lambdas_from_fields(&f, &consts);
        let bundle = thermal_bundle(&p, 0.05).unwrap();
        let ls = sld(&bundle).unwrap();
        let r = check_pcc(&bundle.state(), &ls).unwrap();
        assert!(r > 1e-3, "expected PCC violation, residual {r}");
    }

    #[test]
    fn rpd_ground_state_real() {
        let p = ParamPoint::new(0.05, 0.14, 0.21);
        let bundle = ground_bundle(&p);
        let r = check_rpd(&bundle).unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn rpd_detects_imaginary_component() {
        let mut v = vec![c(0.0); 8];
        v[0] = c((0.8f64).sqrt());
        v[1] = C64::new(0.0, (0.2f64).sqrt());
        let psi = PureState::new(v).unwrap();
        let dp = vec![c(0.0); 8];
        let bundle =
            DerivativeBundle::new_pure(psi, vec![dp], DerivSource::Analytic).unwrap();
        let r = check_rpd(&bundle).unwrap();
        assert!((r - 0.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn scpm_real_measurement_on_real_probe() {
        let p = ParamPoint::new(0.05, 0.14, 0.21);
        let bundle = ground_bundle(&p);
        // canonical-basis measurement
        let pom: Vec<Vec<C64>> = (0..8)
            .map(|i| {
                let mut v = vec![c(0.0); 8];
                v[i] = c(1.0);
                v
            })
            .collect();
        let (r1, r2) = check_scpm(&bundle, &pom).unwrap();
        assert!(r1 < 1e-9 && r2 < 1e-9, "({r1}, {r2})");
        // its FIM equals the QFIM
        let DerivativeBundle::Pure { psi, d_psi, .. } = &bundle else { unreachable!() };
        let mut probs = Vec::new();
        let mut dprobs = Vec::new();
        for k in 0..8 {
            let pk = psi.vector()[k].norm_sqr();
            probs.push(pk);
            dprobs.push(
                d_psi
                    .iter()
                    .map(|dp| 2.0 * (dp[k] * psi.vector()[k].conj()).re)
                    .collect(),
            );
        }
        let f = fim_povm(&probs, &dprobs).unwrap();
        let q = qfim(&bundle).unwrap();
        assert!(f.sub(&q).max_abs() < 1e-6 * q.max_abs());
    }

    #[test]
    fn scpm_complex_pom_violates() {
        let p = ParamPoint::new(0.05, 0.14, 0.21);
        let bundle = ground_bundle(&p);
        // complex-phased basis: still resolves identity
        let mut pom: Vec<Vec<C64>> = Vec::new();
        for i in 0..4 {
            let mut a = vec![c(0.0); 8];
            let mut b = vec![c(0.0); 8];
            a[2 * i] = c(1.0 / 2f64.sqrt());
            a[2 * i + 1] = C64::new(0.0, 1.0 / 2f64.sqrt());
            b[2 * i] = c(1.0 / 2f64.sqrt());
            b[2 * i + 1] = C64::new(0.0, -1.0 / 2f64.sqrt());
            pom.push(a);
            pom.push(b);
        }
        let (r1, r2) = check_scpm(&bundle, &pom).unwrap();
        assert!(r1.max(r2) > 1e-4, "expected violation ({r1}, {r2})");
    }

    #[test]
    fn fd_linear_model_exact() {
        // rho(l) = rho0 + l1*sigma: derivative recovered exactly
        let rho0 = ComplexMatrix::identity(8).scale(c(0.125));
        let mut sigma = ComplexMatrix::zeros(8);
        sigma[(0, 0)] = c(0.01);
        sigma[(1, 1)] = c(-0.01);
        let model = move |p: &ParamPoint| -> Result<QuantumState, EstimationError> {
            let m = rho0.add(&sigma.scale(c(p.l1)));
            Ok(QuantumState::Mixed(MixedState::new(m)?))
        };
        let bundle = fd_derivatives(&model, &ParamPoint::new(0.0, 0.0, 0.0), 1e-4).unwrap();
        let d = bundle.d_rho_matrices();
        assert!((d[0][(0, 0)].re - 0.01).abs() < 1e-10);
        assert!(d[1].max_norm() < 1e-12 && d[2].max_norm() < 1e-12);
    }

    #[test]
    fn fd_second_order_convergence() {
        let model = |p: &ParamPoint| -> Result<QuantumState, EstimationError> {
            let h = build_hamiltonian(p, &default_constants());
            let (gs, _) = ground_state(&h)?;
            Ok(QuantumState::Pure(gs))
        };
        let p = ParamPoint::new(0.05, 0.2, 0.13);
        let exact = ground_bundle(&p);
        let DerivativeBundle::Pure { d_psi: de, .. } = &exact else { unreachable!() };
        let err_of = |step: f64| -> f64 {
            let b = fd_derivatives(&model, &p, step).unwrap();
            let DerivativeBundle::Pure { d_psi, .. } = &b else { unreachable!() };
            let mut e: f64 = 0.0;
            for (a, bb) in d_psi.iter().zip(de) {
                for (x, y) in a.iter().zip(bb) {
                    e = e.max((x - y).norm());
                }
            }
            e
        };
        let e1 = err_of(4e-3);
        let e2 = err_of(2e-3);
        let ratio = e1 / e2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn bounds_diag_and_wcc_limits() {
        let q = RealMatrix::from_fn(3, |i, j| {
            if i == j {
                [2.0, 4.0, 5.0][i]
            } else {
                0.0
            }
        });
        let d = RealMatrix::zeros(3);
        let w = RealMatrix::identity(3);
        let b = bounds(&q, &d, &w, Some(&[0.1, 0.2, 0.3])).unwrap();
        assert!((b.cs - (0.5 + 0.25 + 0.2)).abs() < 1e-12);
        assert!((b.ch_bar - b.cs).abs() < 1e-12);
        assert!(b.r == 0.0);
        let msnr = b.msnr_bar.unwrap();
        let expect = 1.0 / (1.0 / (0.1f64.powi(2) * 2.0)
            + 1.0 / (0.2f64.powi(2) * 4.0)
            + 1.0 / (0.3f64.powi(2) * 5.0));
        assert!((msnr - expect).abs() < 1e-12);
    }

    #[test]
    fn bounds_singular_direction() {
        let q = RealMatrix::from_fn(3, |i, j| {
            if i == j {
                [0.0, 4.0, 5.0][i]
            } else {
                0.0
            }
        });
        let d = RealMatrix::zeros(3);
        let b = bounds(&q, &d, &RealMatrix::identity(3), None).unwrap();
        assert!(b.cs.is_infinite());
        assert!(!b.estimable[0] && b.estimable[1] && b.estimable[2]);
        assert!((b.cs_estimable - (0.25 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn bounds_rejects_bad_weight() {
        let q = RealMatrix::identity(3);
        let d = RealMatrix::zeros(3);
        let mut w = RealMatrix::identity(3);
        w[(2, 2)] = -1.0;
        assert!(matches!(
            bounds(&q, &d, &w, None),
            Err(EstimationError::WeightNotPositive)
        ));
    }

    #[test]
    fn qfim_reparametrization_covariance() {
        let p = ParamPoint::new(0.04, 0.12, 0.2);
        let bundle = thermal_bundle(&p, 0.06).unwrap();
        let q = qfim(&bundle).unwrap();
        // λ' = A λ with invertible A: bundle derivatives transform with A^{-T} rows
        let a = RealMatrix::from_fn(3, |i, j| {
            [[1.0, 0.3, 0.0], [0.0, 1.0, -0.2], [0.1, 0.0, 1.0]][i][j]
        });
        let ainv = a.inverse().unwrap();
        let drs = bundle.d_rho_matrices();
        let DerivativeBundle::Mixed { rho, .. } = &bundle else { unreachable!() };
        // ∂'_μ = Σ_ν (A^{-1})_{νμ} ∂_ν
        let new_drs: Vec<ComplexMatrix> = (0..3)
            .map(|mu| {
                let mut m = ComplexMatrix::zeros(8);
                for nu in 0..3 {
                    m = m.add(&drs[nu].scale(c(ainv[(nu, mu)])));
                }
                m
            })
            .collect();
        let b2 =
            DerivativeBundle::new_mixed(rho.clone(), new_drs, DerivSource::Analytic).unwrap();
        let q2 = qfim(&b2).unwrap();
        let expect = ainv.transpose().matmul(&q.matmul(&ainv));
        assert!(q2.sub(&expect).max_abs() < 1e-8 * q.max_abs());
    }

    #[test]
    fn report_assembles() {
        let p = ParamPoint::new(0.04, 0.12, 0.2);
        let bundle = thermal_bundle(&p, 0.06).unwrap();
        let rep = full_report(&bundle, &RealMatrix::identity(3), Some(&p.as_array())).unwrap();
        assert!(rep.wcc_residual <= 1e-10);
        assert!(rep.pcc_residual > 1e-3);
        assert!(rep.cs.is_finite() && rep.cs > 0.0);
        assert!(rep.ch_bar >= rep.cs - 1e-12);
        assert!(rep.r >= 0.0 && rep.r <= 1.0);
    }
}
