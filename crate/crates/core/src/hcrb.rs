//! Holevo bound evaluation by convex minimization.
//!
//! The bound is the minimum of Tr\[W Re Z\] + ‖√W Im Z √W‖₁ over Hermitian
//! operator tuples X with Tr\[∂_μρ X_ν\] = δ_{μν}, Z_{μν} = Tr\[ρ X_μ X_ν\].
//! Since Z is the Gram matrix of v_μ = vec(X_μ √ρ), the problem lifts to
//! the semidefinite program
//!     min Tr\[W U\]  s.t.  \[\[U, M†\], \[M, I\]\] ⪰ 0,
//! with U real symmetric and M the column stack of the v_μ. A primal
//! log-barrier interior-point method solves the lifted program; a projected
//! subgradient on X (exact 1-norm subgradient) cross-validates it.

use crate::estimation::{bounds, qfim, sld, tol, DerivativeBundle, EstimationError};
use crate::matrix::{inner, vec_norm, ComplexMatrix, MatrixError, RealMatrix};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HcrbError {
    #[error("QFIM is singular on the weighted directions; reduce to the estimable sub-block")]
    SingularQfim,
    #[error("constraints are infeasible: derivatives not independent")]
    InfeasibleConstraints,
    #[error("interior-point solver failed to converge ({0})")]
    NoConvergence(String),
    #[error("weight matrix is not positive definite")]
    BadWeight,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

/// A Holevo-bound problem instance.
pub struct HolevoProblem {
    pub bundle: DerivativeBundle,
    pub weight: RealMatrix,
    /// Relative duality-gap target (default 1e-6).
    pub tolerance: f64,
}

impl HolevoProblem {
    pub fn new(bundle: DerivativeBundle, weight: RealMatrix) -> Self {
        Self { bundle, weight, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    /// Barrier duality-gap estimate at termination.
    pub gap_estimate: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

#[derive(Debug)]
pub struct HolevoSolution {
    pub ch: f64,
    /// Optimal X operators embedded back in the full space.
    pub x_opt: Vec<ComplexMatrix>,
    pub certificate: Certificate,
}

/// Active-subspace data for a problem: isometry columns spanning
/// supp(ρ) ∪ range(∂ρ), with ρ and ∂ρ projected onto it.
struct ActiveSpace {
    /// 8 x k isometry (columns orthonormal).
    basis: Vec<Vec<C64>>,
    drho_a: Vec<ComplexMatrix>,
    /// k x r support-restricted root of ρ.
    sqrt_rho: Vec<Vec<C64>>,
}

fn build_active_space(bundle: &DerivativeBundle) -> Result<ActiveSpace, HcrbError> {
    let rho = bundle.state().density_matrix();
    let drho = bundle.d_rho_matrices();
    let n = rho.dim();
    let op = crate::matrix::HermitianOperator::new_symmetrized(rho.clone())?;
    let spec = op.spectrum();

    let mut cand: Vec<Vec<C64>> = Vec::new();
    for k in 0..n {
        if spec.eigenvalues[k] > tol::SUPPORT {
            cand.push(spec.eigenvector(k));
        }
    }
    for d in &drho {
        let scale = d.max_norm().max(1e-300);
        for j in 0..n {
            let col = d.column(j);
            if vec_norm(&col) > 1e-9 * scale {
                cand.push(col);
            }
        }
    }
    // Gram-Schmidt
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut v in cand {
        for b in &basis {
            let ov = inner(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= ov * y;
            }
        }
        let nn = vec_norm(&v);
        if nn > 1e-8 {
            for x in v.iter_mut() {
                *x /= nn;
            }
            basis.push(v);
        }
        if basis.len() == n {
            break;
        }
    }
    let k = basis.len();
    let project = |m: &ComplexMatrix| -> ComplexMatrix {
        ComplexMatrix::from_fn(k, |a, b| inner(&basis[a], &m.apply(&basis[b])))
    };
    let rho_a = project(&rho);
    let drho_a: Vec<ComplexMatrix> = drho.iter().map(&project).collect();

    // support-restricted root in A coordinates
    let op_a = crate::matrix::HermitianOperator::new_symmetrized(rho_a.clone())?;
    let spec_a = op_a.spectrum();
    let mut sqrt_rho = Vec::new();
    for j in 0..k {
        if spec_a.eigenvalues[j] > tol::SUPPORT {
            let v = spec_a.eigenvector(j);
            let s = spec_a.eigenvalues[j].sqrt();
            sqrt_rho.push(v.into_iter().map(|z| z * s).collect());
        }
    }
    Ok(ActiveSpace { basis, drho_a, sqrt_rho })
}

/// Hermitian basis element `i` of k x k matrices, real-coordinate convention:
/// i < k: e_a e_a†; then symmetric pairs (a<b): (e_a e_b† + e_b e_a†)/√2;
/// then antisymmetric pairs: i(e_a e_b† − e_b e_a†)/√2.
fn herm_basis_apply(k: usize, i: usize, coeff: f64, out: &mut ComplexMatrix) {
    if i < k {
        out[(i, i)] += C64::new(coeff, 0.0);
        return;
    }
    let m = i - k;
    let pairs = k * (k - 1) / 2;
    let (idx, imag) = if m < pairs { (m, false) } else { (m - pairs, true) };
    // unrank pair index
    let mut a = 0;
    let mut rem = idx;
    loop {
        let row_len = k - 1 - a;
        if rem < row_len {
            break;
        }
        rem -= row_len;
        a += 1;
    }
    let b = a + 1 + rem;
    let s = coeff / 2f64.sqrt();
    if imag {
        out[(a, b)] += C64::new(0.0, s);
        out[(b, a)] += C64::new(0.0, -s);
    } else {
        out[(a, b)] += C64::new(s, 0.0);
        out[(b, a)] += C64::new(s, 0.0);
    }
}

fn herm_coords(k: usize, m: &ComplexMatrix) -> Vec<f64> {
    let mut c = Vec::with_capacity(k * k);
    for a in 0..k {
        c.push(m[(a, a)].re);
    }
    for a in 0..k {
        for b in (a + 1)..k {
            c.push((m[(a, b)].re + m[(b, a)].re) / 2f64.sqrt());
        }
    }
    for a in 0..k {
        for b in (a + 1)..k {
            c.push((m[(a, b)].im - m[(b, a)].im) / 2f64.sqrt());
        }
    }
    c
}

fn herm_from_coords(k: usize, c: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(k);
    for (i, x) in c.iter().enumerate() {
        if *x != 0.0 {
            herm_basis_apply(k, i, *x, &mut m);
        }
    }
    m
}

/// Feasible SLD-built starting tuple X_μ = Σ_ν (Q^{-1})_{μν} L_ν, projected
/// onto the active subspace. Its lifted objective equals C̄^H exactly.
fn sld_start(
    bundle: &DerivativeBundle,
    space: &ActiveSpace,
) -> Result<Vec<ComplexMatrix>, HcrbError> {
    let q = qfim(bundle)?;
    let qinv = q.inverse().map_err(|_| HcrbError::SingularQfim)?;
    let ls = sld(bundle)?;
    let k = space.basis.len();
    let d = ls.len();
    let mut out = Vec::with_capacity(d);
    for mu in 0..d {
        let mut xa = ComplexMatrix::zeros(k);
        for nu in 0..d {
            let la = ComplexMatrix::from_fn(k, |a, b| {
                inner(&space.basis[a], &ls[nu].matrix().apply(&space.basis[b]))
            });
            xa = xa.add(&la.scale(C64::new(qinv[(mu, nu)], 0.0)));
        }
        out.push(xa);
    }
    Ok(out)
}

/// Lifted-program data shared by both solvers.
struct Lifted {
    d: usize,
    k: usize,
    r: usize,
    /// null-space basis of the constraint map, as Hermitian coordinate vectors.
    null_basis: Vec<Vec<f64>>,
    x0: Vec<ComplexMatrix>,
    space: ActiveSpace,
    w: RealMatrix,
    sqw: RealMatrix,
}

fn build_lifted(problem: &HolevoProblem) -> Result<Lifted, HcrbError> {
    let d = problem.bundle.n_params();
    let (weig, _) = problem.weight.sym_eigen()?;
    if weig.iter().any(|e| *e <= 0.0) {
        return Err(HcrbError::BadWeight);
    }
    let space = build_active_space(&problem.bundle)?;
    let k = space.basis.len();
    let r = space.sqrt_rho.len();
    // constraint rows: c_nu[i] = Tr[drho_nu E_i] over the Hermitian basis
    let nherm = k * k;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    for nu in 0..d {
        rows.push(herm_coords(k, &space.drho_a[nu].adjoint()));
        // Tr[A E_i] with A Hermitian: coords of A in the orthonormal-like basis
        // (herm_coords uses the same inner products up to normalization below)
    }
    // our basis is orthogonal with Tr[E_i E_j] = δ_ij... (diag: 1, pairs: 1)
    // herm_coords(A)[i] = Tr[A E_i] for this normalization.
    // orthonormalize constraint rows
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for row in &rows {
        let mut v = row.clone();
        for o in &ortho {
            let dot: f64 = v.iter().zip(o).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(o) {
                *x -= dot * y;
            }
        }
        let nn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nn < 1e-12 {
            return Err(HcrbError::InfeasibleConstraints);
        }
        for x in v.iter_mut() {
            *x /= nn;
        }
        ortho.push(v);
    }
    // null basis: canonical directions minus constraint-space components.
    // Directions with B √ρ = 0 affect neither the objective nor the
    // constraints (completely flat for the barrier) and are dropped.
    let image_norm = |coords: &[f64]| -> f64 {
        let b = herm_from_coords(k, coords);
        let mut acc = 0.0;
        for a in 0..k {
            for s in 0..r {
                let mut z = C64::new(0.0, 0.0);
                for bb in 0..k {
                    z += b[(a, bb)] * space.sqrt_rho[s][bb];
                }
                acc += z.norm_sqr();
            }
        }
        acc.sqrt()
    };
    let mut null_basis: Vec<Vec<f64>> = Vec::with_capacity(nherm - d);
    for i in 0..nherm {
        let mut v = vec![0.0; nherm];
        v[i] = 1.0;
        for o in &ortho {
            let dot = o[i];
            for (x, y) in v.iter_mut().zip(o) {
                *x -= dot * y;
            }
        }
        for nb in &null_basis {
            let dot: f64 = v.iter().zip(nb).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(nb) {
                *x -= dot * y;
            }
        }
        let nn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nn > 1e-9 {
            for x in v.iter_mut() {
                *x /= nn;
            }
            if image_norm(&v) > 1e-10 {
                null_basis.push(v);
            }
        }
        if null_basis.len() == nherm - d {
            break;
        }
    }
    let x0 = sld_start(&problem.bundle, &space)?;
    let sqw = problem.weight.sym_sqrt()?;
    Ok(Lifted {
        d,
        k,
        r,
        null_basis,
        x0,
        space,
        w: problem.weight.clone(),
        sqw,
    })
}

impl Lifted {
    fn x_of(&self, xcoords: &[f64]) -> Vec<ComplexMatrix> {
        let nb = self.null_basis.len();
        (0..self.d)
            .map(|mu| {
                let mut coords = vec![0.0; self.k * self.k];
                for j in 0..nb {
                    let y = xcoords[mu * nb + j];
                    if y != 0.0 {
                        for (c, b) in coords.iter_mut().zip(&self.null_basis[j]) {
                            *c += y * b;
                        }
                    }
                }
                self.x0[mu].add(&herm_from_coords(self.k, &coords))
            })
            .collect()
    }

    /// v_mu = vec(X_mu sqrt_rho), row-major k x r.
    fn stack_columns(&self, xs: &[ComplexMatrix]) -> Vec<Vec<C64>> {
        xs.iter()
            .map(|x| {
                let mut v = Vec::with_capacity(self.k * self.r);
                for a in 0..self.k {
                    for s in 0..self.r {
                        let mut acc = C64::new(0.0, 0.0);
                        for b in 0..self.k {
                            acc += x[(a, b)] * self.space.sqrt_rho[s][b];
                        }
                        v.push(acc);
                    }
                }
                v
            })
            .collect()
    }

    fn gram(&self, vs: &[Vec<C64>]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.d, |m, n| inner(&vs[m], &vs[n]))
    }

    /// Exact objective Tr[W Re Z] + ‖√W Im Z √W‖₁ for a given X tuple.
    fn objective(&self, xs: &[ComplexMatrix]) -> Result<f64, HcrbError> {
        let z = self.gram(&self.stack_columns(xs));
        let rez = RealMatrix::from_fn(self.d, |m, n| z[(m, n)].re);
        let imz = RealMatrix::from_fn(self.d, |m, n| z[(m, n)].im);
        let t = self.sqw.matmul(&imz.matmul(&self.sqw));
        // trace norm of the antisymmetric part via i*T Hermitian
        let it = ComplexMatrix::from_fn(self.d, |m, n| C64::new(0.0, t[(m, n)]));
        let h = crate::matrix::HermitianOperator::new_symmetrized(it)?;
        let tn: f64 = h.eigenvalues().iter().map(|e| e.abs()).sum();
        Ok(self.w.matmul(&rez).trace() + tn)
    }
}

/// Complex Cholesky: S = L L†, returns None if not positive definite.
fn cholesky(s: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = s.dim();
    let mut l = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s[(i, j)];
            for p in 0..j {
                sum -= l[(i, p)] * l[(j, p)].conj();
            }
            if i == j {
                if sum.re <= 1e-300 || sum.im.abs() > 1e-8 * (1.0 + sum.re.abs()) {
                    return None;
                }
                l[(i, j)] = C64::new(sum.re.sqrt(), 0.0);
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

fn chol_logdet(l: &ComplexMatrix) -> f64 {
    (0..l.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

/// S^{-1} from the Cholesky factor.
fn chol_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.dim();
    // forward-substitute for L^{-1}
    let mut linv = ComplexMatrix::zeros(n);
    for j in 0..n {
        linv[(j, j)] = C64::new(1.0, 0.0) / l[(j, j)];
        for i in (j + 1)..n {
            let mut sum = C64::new(0.0, 0.0);
            for p in j..i {
                sum += l[(i, p)] * linv[(p, j)];
            }
            linv[(i, j)] = -sum / l[(i, i)];
        }
    }
    // S^{-1} = L^{-†} L^{-1}
    linv.adjoint().matmul(&linv)
}

struct BarrierState {
    /// y = [U coords (d(d+1)/2)] ++ [X coords (d * null_dim)]
    y: Vec<f64>,
}

/// Interior-point solve of the lifted program.
pub fn holevo_bound(problem: &HolevoProblem) -> Result<HolevoSolution, HcrbError> {
    holevo_bound_from_start(problem, None)
}

/// As `holevo_bound`, with an optional random (feasible) perturbation of the
/// starting tuple; the optimum of the convex program must not depend on it.
pub fn holevo_bound_from_start(
    problem: &HolevoProblem,
    start_perturbation: Option<(u64, f64)>,
) -> Result<HolevoSolution, HcrbError> {
    let lifted = build_lifted(problem)?;
    let d = lifted.d;
    let nu = d * (d + 1) / 2;
    let nbasis = lifted.null_basis.len();
    let nx = d * nbasis;
    let block = d + lifted.k * lifted.r;

    // initial U: Re Z0 + margin*I
    let v0 = lifted.stack_columns(&lifted.x0);
    let z0 = lifted.gram(&v0);
    let imz0 = RealMatrix::from_fn(d, |m, n| z0[(m, n)].im);
    let margin = {
        let it = ComplexMatrix::from_fn(d, |m, n| C64::new(0.0, imz0[(m, n)]));
        let h = crate::matrix::HermitianOperator::new_symmetrized(it).unwrap();
        h.operator_norm() + 0.1 * (1.0 + z0.trace().re.abs())
    };
    let mut state = BarrierState { y: vec![0.0; nu + nx] };
    {
        let mut idx = 0;
        for a in 0..d {
            state.y[idx] = z0[(a, a)].re + margin;
            idx += 1;
        }
        for a in 0..d {
            for b in (a + 1)..d {
                state.y[idx] = z0[(a, b)].re;
                idx += 1;
            }
        }
    }
    if let Some((seed, magnitude)) = start_perturbation {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let scale = magnitude * (1.0 + z0.trace().re.abs());
        for x in state.y[nu..].iter_mut() {
            *x += rng.gen_range(-scale..scale);
        }
        // widen U to stay strictly inside the cone after the X move
        for a in 0..d {
            state.y[a] += 10.0 * scale * scale + scale;
        }
    }

    let u_of = |y: &[f64]| -> RealMatrix {
        let mut u = RealMatrix::zeros(d);
        let mut idx = 0;
        for a in 0..d {
            u[(a, a)] = y[idx];
            idx += 1;
        }
        for a in 0..d {
            for b in (a + 1)..d {
                u[(a, b)] = y[idx];
                u[(b, a)] = y[idx];
                idx += 1;
            }
        }
        u
    };

    // assemble S(y)
    let s_of = |lifted: &Lifted, y: &[f64]| -> ComplexMatrix {
        let u = u_of(y);
        let xs = lifted.x_of(&y[nu..]);
        let vs = lifted.stack_columns(&xs);
        let mut s = ComplexMatrix::zeros(block);
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] = C64::new(u[(a, b)], 0.0);
            }
        }
        for mu in 0..d {
            for al in 0..(lifted.k * lifted.r) {
                s[(d + al, mu)] = vs[mu][al];
                s[(mu, d + al)] = vs[mu][al].conj();
            }
        }
        for al in 0..(lifted.k * lifted.r) {
            s[(d + al, d + al)] = C64::new(1.0, 0.0);
        }
        s
    };

    // dyad representation of each dS/dy_i: list of (x_vec, y_vec) pairs such
    // that A_i = Σ x y† + y x†  (diagonal U vars: single e_a e_a†).
    // family vectors: e_0..e_{d-1} (unit), and n_j = embed(vec(B_j sqrt_rho))
    let mut family: Vec<Vec<C64>> = Vec::new();
    for a in 0..d {
        let mut v = vec![C64::new(0.0, 0.0); block];
        v[a] = C64::new(1.0, 0.0);
        family.push(v);
    }
    for j in 0..nbasis {
        let b = herm_from_coords(lifted.k, &lifted.null_basis[j]);
        let mut v = vec![C64::new(0.0, 0.0); block];
        for a in 0..lifted.k {
            for s in 0..lifted.r {
                let mut acc = C64::new(0.0, 0.0);
                for bb in 0..lifted.k {
                    acc += b[(a, bb)] * lifted.space.sqrt_rho[s][bb];
                }
                v[d + a * lifted.r + s] = acc;
            }
        }
        family.push(v);
    }
    // variable -> dyads (indices into family, with weight)
    // U diag a: (a, a) weight 1/2 so that x y† + y x† = e_a e_a†
    enum Dyad {
        Sym(usize, usize, f64),
    }
    let mut dyads: Vec<Dyad> = Vec::with_capacity(nu + nx);
    for a in 0..d {
        dyads.push(Dyad::Sym(a, a, 0.5));
    }
    for a in 0..d {
        for b in (a + 1)..d {
            dyads.push(Dyad::Sym(a, b, 1.0));
        }
    }
    for mu in 0..d {
        for j in 0..nbasis {
            dyads.push(Dyad::Sym(d + j, mu, 1.0));
        }
    }

    // linear objective coefficients
    let mut cvec = vec![0.0; nu + nx];
    {
        let mut idx = 0;
        for a in 0..d {
            cvec[idx] = problem.weight[(a, a)];
            idx += 1;
        }
        for a in 0..d {
            for b in (a + 1)..d {
                cvec[idx] = 2.0 * problem.weight[(a, b)];
                idx += 1;
            }
        }
    }

    let nvar = nu + nx;
    let mut total_newton = 0usize;
    let obj_scale = {
        let u0 = u_of(&state.y);
        problem.weight.matmul(&u0).trace().abs().max(1e-9)
    };
    let mut t_bar = (block as f64) / obj_scale;
    let gap_target = (problem.tolerance * obj_scale * 1e-2).max(1e-12);

    let mut converged = false;
    for _outer in 0..60 {
        // Newton centering
        for _inner in 0..80 {
            total_newton += 1;
            let s = s_of(&lifted, &state.y);
            let l = cholesky(&s).ok_or_else(|| {
                HcrbError::NoConvergence("iterate left the cone".into())
            })?;
            let g = chol_inverse(&l);
            // bilinears F[p][q] = family_p† G family_q
            let nf = family.len();
            let mut fmat = vec![vec![C64::new(0.0, 0.0); nf]; nf];
            let gf: Vec<Vec<C64>> = family.iter().map(|v| g.apply(v)).collect();
            for p in 0..nf {
                for q in 0..nf {
                    fmat[p][q] = inner(&family[p], &gf[q]);
                }
            }
            // gradient and Hessian
            let mut grad = vec![0.0; nvar];
            let mut hess = vec![vec![0.0; nvar]; nvar];
            let dyad_parts = |dy: &Dyad| -> (usize, usize, f64) {
                match dy {
                    Dyad::Sym(x, y, w) => (*x, *y, *w),
                }
            };
            for i in 0..nvar {
                let (xi, yi, wi) = dyad_parts(&dyads[i]);
                // Tr[G A_i] = w (y† G x + x† G y) = 2 w Re[y† G x]
                grad[i] = t_bar * cvec[i] - 2.0 * wi * fmat[yi][xi].re;
                for j in i..nvar {
                    let (xj, yj, wj) = dyad_parts(&dyads[j]);
                    // Tr[G A_i G A_j] with A = w(x y† + y x†)
                    let t1 = fmat[yi][xj] * fmat[yj][xi];
                    let t2 = fmat[yi][yj] * fmat[xj][xi];
                    let val = 2.0 * wi * wj * (t1 + t2).re;
                    hess[i][j] = val;
                    hess[j][i] = val;
                }
            }
            // solve H delta = -grad (dense symmetric, with jitter fallback)
            let delta = match solve_sym(&mut hess.clone(), &grad) {
                Some(mut d) => {
                    for x in d.iter_mut() {
                        *x = -*x;
                    }
                    d
                }
                None => {
                    for (idx, row) in hess.iter_mut().enumerate() {
                        row[idx] += 1e-10 * (1.0 + row[idx].abs());
                    }
                    let mut d = solve_sym(&mut hess, &grad).ok_or_else(|| {
                        HcrbError::NoConvergence("singular Newton system".into())
                    })?;
                    for x in d.iter_mut() {
                        *x = -*x;
                    }
                    d
                }
            };
            let decrement: f64 = -grad.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
            if decrement < 0.0 {
                return Err(HcrbError::NoConvergence("negative Newton decrement".into()));
            }
            if decrement * 0.5 < 1e-11 {
                break;
            }
            // backtracking line search on the barrier objective
            let f_val = |y: &[f64]| -> Option<f64> {
                let s = s_of(&lifted, y);
                let l = cholesky(&s)?;
                let obj: f64 = cvec.iter().zip(y).map(|(c, x)| c * x).sum();
                Some(t_bar * obj - chol_logdet(&l))
            };
            let f0 = f_val(&state.y)
                .ok_or_else(|| HcrbError::NoConvergence("infeasible iterate".into()))?;
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let ytry: Vec<f64> = state
                    .y
                    .iter()
                    .zip(&delta)
                    .map(|(a, b)| a + step * b)
                    .collect();
                if let Some(f1) = f_val(&ytry) {
                    if f1 <= f0 - 0.25 * step * decrement {
                        state.y = ytry;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break; // stalled at this centering accuracy
            }
        }
        let gap = (block as f64) / t_bar;
        if gap <= gap_target {
            converged = true;
            break;
        }
        t_bar *= 10.0;
    }

    let xs = lifted.x_of(&state.y[nu..]);
    // report the exact objective of the recovered X (certified upper bound)
    let ch = lifted.objective(&xs)?;
    // embed X back into the full space
    let n_full = problem.bundle.state().dim();
    let x_full: Vec<ComplexMatrix> = xs
        .iter()
        .map(|xa| {
            ComplexMatrix::from_fn(n_full, |i, j| {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..lifted.k {
                    for b in 0..lifted.k {
                        acc += lifted.space.basis[a][i] * xa[(a, b)]
                            * lifted.space.basis[b][j].conj();
                    }
                }
                acc
            })
        })
        .collect();
    Ok(HolevoSolution {
        ch,
        x_opt: x_full,
        certificate: Certificate {
            gap_estimate: (block as f64) / t_bar,
            newton_iterations: total_newton,
            converged,
        },
    })
}

/// Dense symmetric positive-definite solve via Cholesky; None when not PD.
fn solve_sym(h: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    // in-place LL^T
    for i in 0..n {
        for j in 0..=i {
            let mut sum = h[i][j];
            for p in 0..j {
                sum -= h[i][p] * h[j][p];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                h[i][i] = sum.sqrt();
            } else {
                h[i][j] = sum / h[j][j];
            }
        }
    }
    let mut x = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            let t = h[i][p] * x[p];
            x[i] -= t;
        }
        x[i] /= h[i][i];
    }
    for i in (0..n).rev() {
        for p in (i + 1)..n {
            let t = h[p][i] * x[p];
            x[i] -= t;
        }
        x[i] /= h[i][i];
    }
    Some(x)
}

/// Projected subgradient descent on X with the exact 1-norm subgradient.
/// Slower and less accurate than the interior point; used for
/// cross-validation.
pub fn holevo_bound_subgradient(
    problem: &HolevoProblem,
    iterations: usize,
) -> Result<f64, HcrbError> {
    let lifted = build_lifted(problem)?;
    let d = lifted.d;
    let nbasis = lifted.null_basis.len();
    let mut y = vec![0.0; d * nbasis];
    let mut best = lifted.objective(&lifted.x_of(&y))?;
    let mut step = 0.1 * (1.0 + best.abs());
    for _ in 0..iterations {
        let xs = lifted.x_of(&y);
        let vs = lifted.stack_columns(&xs);
        let z = lifted.gram(&vs);
        // subgradient of Tr[W ReZ] + ||sqW ImZ sqW||_1 w.r.t. v_mu
        let imz = RealMatrix::from_fn(d, |m, n| z[(m, n)].im);
        let t = lifted.sqw.matmul(&imz.matmul(&lifted.sqw));
        let it = ComplexMatrix::from_fn(d, |m, n| C64::new(0.0, t[(m, n)]));
        let h = crate::matrix::HermitianOperator::new_symmetrized(it)?;
        let spec = h.spectrum();
        // sign(iT) in the d x d space
        let mut sign = ComplexMatrix::zeros(d);
        for kk in 0..d {
            let s = spec.eigenvalues[kk].signum();
            let v = spec.eigenvector(kk);
            for a in 0..d {
                for b in 0..d {
                    sign[(a, b)] += C64::new(s, 0.0) * v[a] * v[b].conj();
                }
            }
        }
        // S = sqW sign sqW; the exact subgradient in Z is
        // df = Σ_{mn} Re[Ghat_{mn} dZ_{mn}], Ghat_{mn} = W_{mn} + i Im(S_{nm})
        let s_mat = {
            let mut s = ComplexMatrix::zeros(d);
            for a in 0..d {
                for b in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for p in 0..d {
                        for q in 0..d {
                            acc += C64::new(lifted.sqw[(a, p)], 0.0)
                                * sign[(p, q)]
                                * C64::new(lifted.sqw[(q, b)], 0.0);
                        }
                    }
                    s[(a, b)] = acc;
                }
            }
            s
        };
        let ghat = ComplexMatrix::from_fn(d, |m, n| {
            C64::new(lifted.w[(m, n)], s_mat[(n, m)].im)
        });
        // dZ_{mn} = dv_m† v_n + v_m† dv_n: per-column gradient
        // g_k = Σ_n Ghat_{kn} v_n + Σ_m conj(Ghat_{mk}) v_m
        let mut gv: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); lifted.k * lifted.r]; d];
        for m in 0..d {
            for n in 0..d {
                let gmn = ghat[(m, n)];
                for al in 0..(lifted.k * lifted.r) {
                    gv[m][al] += gmn * vs[n][al];
                    gv[n][al] += gmn.conj() * vs[m][al];
                }
            }
        }
        // back to Hermitian X gradient, then project to the null space
        let mut ynew = y.clone();
        for mu in 0..d {
            // gX[a][b] = Σ_s gv[mu][a*r+s] * conj(sqrt_rho[s][b]) , then Hermitize
            let mut gx = ComplexMatrix::zeros(lifted.k);
            for a in 0..lifted.k {
                for s in 0..lifted.r {
                    let gval = gv[mu][a * lifted.r + s];
                    for b in 0..lifted.k {
                        gx[(a, b)] += gval * lifted.space.sqrt_rho[s][b].conj();
                    }
                }
            }
            let gx = gx.add(&gx.adjoint()).scale(C64::new(0.5, 0.0));
            let coords = herm_coords(lifted.k, &gx);
            for j in 0..nbasis {
                let dot: f64 = coords
                    .iter()
                    .zip(&lifted.null_basis[j])
                    .map(|(a, b)| a * b)
                    .sum();
                ynew[mu * nbasis + j] -= step * dot;
            }
        }
        let cand = lifted.objective(&lifted.x_of(&ynew))?;
        if cand < best {
            best = cand;
            y = ynew;
        } else {
            step *= 0.7;
            if step < 1e-12 {
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub cs: f64,
    pub ch: f64,
    pub ch_bar: f64,
    pub cs_times_one_plus_r: f64,
    pub r: f64,
    /// Chain ordering verified within `tolerance`.
    pub ordered: bool,
    pub certificate: Certificate,
}

/// Evaluates the full chain C^S ≤ C^H ≤ C̄^H ≤ C^S (1+R) at a model point.
pub fn sandwich_report(
    bundle: &DerivativeBundle,
    weight: &RealMatrix,
    tolerance: f64,
) -> Result<SandwichReport, HcrbError> {
    let q = qfim(bundle)?;
    let ls = sld(bundle)?;
    let state = bundle.state();
    let d = crate::estimation::uhlmann_curvature(&state, &ls)?;
    let b = bounds(&q, &d, weight, None)?;
    let problem = HolevoProblem {
        bundle: bundle.clone(),
        weight: weight.clone(),
        tolerance,
    };
    let sol = holevo_bound(&problem)?;
    let upper = b.cs * (1.0 + b.r);
    let scale = b.cs.abs().max(1e-12);
    let ordered = b.cs <= sol.ch + tolerance * scale
        && sol.ch <= b.ch_bar + tolerance * scale
        && b.ch_bar <= upper + tolerance * scale;
    Ok(SandwichReport {
        cs: b.cs,
        ch: sol.ch,
        ch_bar: b.ch_bar,
        cs_times_one_plus_r: upper,
        r: b.r,
        ordered,
        certificate: sol.certificate,
    })
}
