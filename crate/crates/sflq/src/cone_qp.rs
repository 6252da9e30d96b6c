//! Inner conic QP solver for every f-side subproblem:
//!
//! ```text
//! minimize  <c, x> + (rho/2) ||M x - b||^2 + (w_id/2) ||x - anchor||^2
//! s.t.      mat(x) in PSD(p),   mat(H_i x + h_i) in PSD(n)  for all i,
//! ```
//!
//! with `M` either the constraint matrix `A` (proximal step of the
//! epi-composition `phi_1`, ADMM W-update) or the identity (PALM's prox of
//! `f`). The method is consensus splitting: duplicate `Z_0 = mat(x)` and
//! `Z_i = Psi_i(x)`, alternate a dense linear solve in `x` (one LU
//! factorization per solver, reused across iterations and calls), PSD
//! projections of each duplicate, and dual ascent. Warm starts across calls
//! are the main runtime lever for the outer loops.

use crate::linalg::{min_eig, psd_project, unvec_mat, vec_mat, DenseMatrix, LuFactor, SymMatrix};
use crate::problem::SfLqProblem;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ConeQpError {
    Invalid(String),
    Numeric(String),
    /// The heuristic detected an infeasible subproblem: the primal residual
    /// stalled while the dual variables kept growing.
    Infeasible { summary: String },
}

impl fmt::Display for ConeQpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "invalid cone QP input: {m}"),
            Self::Numeric(m) => write!(f, "cone QP numeric failure: {m}"),
            Self::Infeasible { summary } => write!(f, "infeasible subproblem: {summary}"),
        }
    }
}

impl std::error::Error for ConeQpError {}

impl From<crate::linalg::LinAlgError> for ConeQpError {
    fn from(e: crate::linalg::LinAlgError) -> Self {
        ConeQpError::Numeric(e.to_string())
    }
}

impl From<crate::problem::ProblemError> for ConeQpError {
    fn from(e: crate::problem::ProblemError) -> Self {
        ConeQpError::Numeric(e.to_string())
    }
}

/// Quadratic coupling of the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `M = A` (the problem's constraint matrix).
    Affine,
    /// `M = I` on the `p^2` variables.
    Identity,
}

#[derive(Debug, Clone)]
pub struct ConeQpOptions {
    /// Cone feasibility target (primal consensus residual).
    pub tol_feas: f64,
    /// Relative objective change target.
    pub tol_obj: f64,
    /// Dual residual target (duplicate-variable drift).
    pub tol_dual: f64,
    pub max_iter: usize,
}

impl Default for ConeQpOptions {
    fn default() -> Self {
        Self { tol_feas: 1e-7, tol_obj: 1e-9, tol_dual: 1e-7, max_iter: 20_000 }
    }
}

impl ConeQpOptions {
    /// Tight tolerances for equivalence and oracle tests.
    pub fn tight() -> Self {
        Self { tol_feas: 1e-10, tol_obj: 1e-13, tol_dual: 1e-10, max_iter: 200_000 }
    }
}

/// One-shot instance description (see [`ConeQpSolver`] for the reusable form).
#[derive(Debug, Clone)]
pub struct ConeQpInstance<'p> {
    pub prob: &'p SfLqProblem,
    pub c: Vec<f64>,
    pub coupling: Coupling,
    pub b: Vec<f64>,
    pub rho: f64,
    /// Extra identity weight `beta_id >= 0` with anchor `x_bar`.
    pub id_weight: f64,
    pub id_anchor: Vec<f64>,
    /// Include the `Psi_i` cones (disabled only in reduced test instances).
    pub psi_cones: bool,
}

impl<'p> ConeQpInstance<'p> {
    pub fn new(prob: &'p SfLqProblem, coupling: Coupling, rho: f64, b: Vec<f64>) -> Self {
        let d = prob.dims.p * prob.dims.p;
        Self {
            prob,
            c: prob.cost.clone(),
            coupling,
            b,
            rho,
            id_weight: 0.0,
            id_anchor: vec![0.0; d],
            psi_cones: true,
        }
    }
}

/// Solver output. The per-cone infeasibility norms are recomputed from the
/// returned iterate, so they always match an external recomputation.
#[derive(Debug, Clone)]
pub struct ConeQpResult {
    pub w_tilde: Vec<f64>,
    /// Full objective `<c,x> + (rho/2)||Mx-b||^2 + (w_id/2)||x-anchor||^2`.
    pub objective: f64,
    /// `max(0, -min_eig)` for the W cone followed by each Psi cone.
    pub primal_residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Cone multipliers (negative semidefinite at convergence); entry 0 is
    /// the W-cone multiplier.
    pub cone_duals: Vec<Vec<f64>>,
    /// Norm of the stationarity residual of the augmented system.
    pub stationarity: f64,
    /// `|<y_i, z_i>|` per cone.
    pub complementarity: Vec<f64>,
}

/// One PSD cone constraint in internally normalized form. The PSD cone is
/// invariant under positive scaling, so each map is divided by its operator
/// norm; this equalizes the consensus weights across cones (pure
/// preconditioning, the feasible set is unchanged).
#[derive(Debug, Clone)]
struct ConeOp {
    /// `None` marks the identity map (the W cone).
    h: Option<DenseMatrix>,
    offset: Vec<f64>,
    side: usize,
    /// Original-to-scaled factor: scaled map = original / scale.
    scale: f64,
}

impl ConeOp {
    fn image(&self, x: &[f64]) -> Vec<f64> {
        match &self.h {
            None => x.to_vec(),
            Some(h) => {
                let mut v = h.matvec(x);
                for (vi, oi) in v.iter_mut().zip(&self.offset) {
                    *vi += oi;
                }
                v
            }
        }
    }

    fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        match &self.h {
            None => v.to_vec(),
            Some(h) => h.tr_matvec(v),
        }
    }
}

/// Over-relaxation factor of the inner consensus iteration.
const RELAXATION: f64 = 1.6;
/// Primal residual level below which the Newton finisher is attempted.
const NEWTON_TRIGGER: f64 = 1e-3;
/// Newton attempt period (iterations).
const NEWTON_PERIOD: usize = 50;
/// Proximal-point round cap of one Newton attempt.
const NEWTON_ROUNDS: usize = 14;
/// Residual-balancing period for the consensus penalty.
const ADAPT_PERIOD: usize = 25;

/// Reusable solver bound to one problem, coupling, and penalty weight.
/// Successive [`ConeQpSolver::solve`] calls warm-start from the previous
/// primal/dual state.
#[derive(Debug)]
pub struct ConeQpSolver<'p> {
    prob: &'p SfLqProblem,
    coupling: Coupling,
    rho: f64,
    id_weight: f64,
    id_anchor: Vec<f64>,
    c: Vec<f64>,
    sigma: f64,
    ops: Vec<ConeOp>,
    /// `rho M^T M + w_id I` (sigma-independent part of the x-step system).
    base_mat: DenseMatrix,
    /// `sum_k G_k^T G_k` over the scaled cone maps.
    gram_mat: DenseMatrix,
    fact: LuFactor,
    newton: Option<NewtonData>,
    // warm state (z, y live in the scaled cone coordinates)
    x: Vec<f64>,
    z: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    warm: bool,
}

impl<'p> ConeQpSolver<'p> {
    /// Solver for `min <c,x> + (rho/2)||A x - b||^2` over the cones.
    pub fn new_affine(prob: &'p SfLqProblem, rho: f64) -> Result<Self, ConeQpError> {
        let inst = ConeQpInstance::new(prob, Coupling::Affine, rho, Vec::new());
        Self::from_instance(&inst)
    }

    /// Solver for `min <c,x> + (rho/2)||x - b||^2` over the cones.
    pub fn new_identity(prob: &'p SfLqProblem, rho: f64) -> Result<Self, ConeQpError> {
        let inst = ConeQpInstance::new(prob, Coupling::Identity, rho, Vec::new());
        Self::from_instance(&inst)
    }

    pub fn from_instance(inst: &ConeQpInstance<'p>) -> Result<Self, ConeQpError> {
        if inst.rho <= 0.0 && inst.id_weight <= 0.0 {
            return Err(ConeQpError::Invalid("need rho > 0 or an identity anchor".into()));
        }
        let prob = inst.prob;
        let d = prob.dims.p * prob.dims.p;
        if inst.id_anchor.len() != d || inst.c.len() != d {
            return Err(ConeQpError::Invalid("cost/anchor length must be p^2".into()));
        }
        // consensus penalty: small relative to the cost scale; the terminal
        // accuracy comes from the face refinement, not from the tail of the
        // splitting iteration
        let c_inf = inst.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let sigma = 0.02 * (1.0 + c_inf);

        // normalized cone maps: cone 0 is the identity (scale 1), the Psi
        // maps are divided by their operator norm
        let mut ops = vec![ConeOp {
            h: None,
            offset: vec![0.0; d],
            side: prob.dims.p,
            scale: 1.0,
        }];
        if inst.psi_cones {
            for cm in &prob.cone_maps {
                let gram = SymMatrix::from_dense(&cm.h.transpose().matmul(&cm.h));
                let top = crate::linalg::sym_eig(&gram)
                    .map_err(ConeQpError::from)?
                    .values[0]
                    .max(0.0);
                let scale = top.sqrt().max(1e-12);
                ops.push(ConeOp {
                    h: Some(cm.h.scale(1.0 / scale)),
                    offset: cm.offset.iter().map(|v| v / scale).collect(),
                    side: cm.dim,
                    scale,
                });
            }
        }

        // sigma-independent part: rho M^T M + w_id I
        let mut base_mat = DenseMatrix::zeros(d, d);
        match inst.coupling {
            Coupling::Affine => {
                let ata = inst.prob.a_mat.transpose().matmul(&inst.prob.a_mat);
                base_mat = base_mat.add(&ata.scale(inst.rho));
            }
            Coupling::Identity => {
                for i in 0..d {
                    base_mat.set(i, i, base_mat.get(i, i) + inst.rho);
                }
            }
        }
        for i in 0..d {
            base_mat.set(i, i, base_mat.get(i, i) + inst.id_weight);
        }
        // consensus Gram: I + sum over the scaled Psi maps
        let mut gram_mat = DenseMatrix::identity(d);
        for op in ops.iter().skip(1) {
            let h = op.h.as_ref().expect("Psi cones carry a map");
            gram_mat = gram_mat.add(&h.transpose().matmul(h));
        }
        let fact = LuFactor::new(&base_mat.add(&gram_mat.scale(sigma)))
            .map_err(ConeQpError::from)?;

        let z = ops.iter().map(|op| vec![0.0; op.side * op.side]).collect();
        let y = ops.iter().map(|op| vec![0.0; op.side * op.side]).collect();

        Ok(Self {
            prob,
            coupling: inst.coupling,
            rho: inst.rho,
            id_weight: inst.id_weight,
            id_anchor: inst.id_anchor.clone(),
            c: inst.c.clone(),
            sigma,
            ops,
            base_mat,
            gram_mat,
            fact,
            newton: None,
            x: vec![0.0; d],
            z,
            y,
            warm: false,
        })
    }

    /// Change the consensus penalty and refactorize the x-step system.
    fn set_sigma(&mut self, sigma: f64) -> Result<(), ConeQpError> {
        self.sigma = sigma;
        self.fact = LuFactor::new(&self.base_mat.add(&self.gram_mat.scale(sigma)))
            .map_err(ConeQpError::from)?;
        Ok(())
    }

    /// Forget the warm-start state.
    pub fn reset(&mut self) {
        for v in self.x.iter_mut() {
            *v = 0.0;
        }
        for z in self.z.iter_mut() {
            z.iter_mut().for_each(|v| *v = 0.0);
        }
        for y in self.y.iter_mut() {
            y.iter_mut().for_each(|v| *v = 0.0);
        }
        self.warm = false;
    }

    fn n_cones(&self) -> usize {
        self.ops.len()
    }

    fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        match self.coupling {
            Coupling::Affine => self.prob.apply_a(x),
            Coupling::Identity => x.to_vec(),
        }
    }

    fn apply_mt(&self, v: &[f64]) -> Vec<f64> {
        match self.coupling {
            Coupling::Affine => self.prob.apply_at(v),
            Coupling::Identity => v.to_vec(),
        }
    }

    fn objective(&self, x: &[f64], b: &[f64]) -> f64 {
        let lin: f64 = self.c.iter().zip(x).map(|(c, x)| c * x).sum();
        let mx = self.apply_m(x);
        let coupling: f64 = mx.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum();
        let anchor: f64 =
            x.iter().zip(&self.id_anchor).map(|(a, b)| (a - b) * (a - b)).sum();
        lin + 0.5 * self.rho * coupling + 0.5 * self.id_weight * anchor
    }

    /// Solve with the stored warm state and target vector `b`.
    pub fn solve(&mut self, b: &[f64], opts: &ConeQpOptions) -> Result<ConeQpResult, ConeQpError> {
        let expect = match self.coupling {
            Coupling::Affine => self.prob.dims.rows(),
            Coupling::Identity => self.prob.dims.p * self.prob.dims.p,
        };
        if b.len() != expect {
            return Err(ConeQpError::Invalid(format!(
                "target length {} does not match coupling ({expect})",
                b.len()
            )));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(ConeQpError::Invalid("non-finite target".into()));
        }
        let b_inf = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let mut base_rhs = self.apply_mt(b);
        for v in base_rhs.iter_mut() {
            *v *= self.rho;
        }
        for (r, (a, c)) in base_rhs.iter_mut().zip(self.id_anchor.iter().zip(&self.c)) {
            *r += self.id_weight * a - c;
        }

        if !self.warm {
            // start the duplicates at the projections of the initial image
            for k in 0..self.n_cones() {
                let img = self.ops[k].image(&self.x);
                self.z[k] = project_psd_vec(&img, self.ops[k].side)?;
            }
            self.warm = true;
        }

        let mut prev_obj = self.objective(&self.x, b);
        let mut converged = false;
        let mut iterations = 0;

        // infeasibility heuristic state: a stall means the primal residual
        // sits above the level without meaningful improvement
        const STALL_LEVEL: f64 = 1e-3;
        const STALL_SPAN: usize = 2_000;
        let mut stall_count = 0usize;
        let mut stall_dual0 = 0.0_f64;
        let mut window_min = f64::INFINITY;

        for iter in 1..=opts.max_iter {
            iterations = iter;
            // x-update: assemble rhs and reuse the factorization
            let sigma = self.sigma;
            let mut rhs = base_rhs.clone();
            for k in 0..self.n_cones() {
                let op = &self.ops[k];
                let diff: Vec<f64> = self.z[k]
                    .iter()
                    .zip(self.y[k].iter().zip(&op.offset))
                    .map(|(z, (y, o))| sigma * (z - o) - y)
                    .collect();
                if op.h.is_none() {
                    for (r, v) in rhs.iter_mut().zip(&diff) {
                        *r += v;
                    }
                } else {
                    let back = op.apply_t(&diff);
                    for (r, v) in rhs.iter_mut().zip(&back) {
                        *r += v;
                    }
                }
            }
            self.x = self.fact.solve(&rhs);

            // relaxed z- and y-updates with the fresh x
            let mut primal_inf = 0.0_f64;
            let mut dual_inf = 0.0_f64;
            let mut img_scale = 1.0_f64;
            let mut dual_scale = 1.0_f64;
            for k in 0..self.n_cones() {
                let op = &self.ops[k];
                let img = op.image(&self.x);
                let relaxed: Vec<f64> = img
                    .iter()
                    .zip(&self.z[k])
                    .map(|(w, z)| RELAXATION * w + (1.0 - RELAXATION) * z)
                    .collect();
                let v: Vec<f64> =
                    relaxed.iter().zip(&self.y[k]).map(|(w, y)| w + y / sigma).collect();
                let z_new = project_psd_vec(&v, op.side)?;
                let mut res2 = 0.0;
                for (((y, w), z), img_w) in
                    self.y[k].iter_mut().zip(&relaxed).zip(&z_new).zip(&img)
                {
                    *y += sigma * (w - z);
                    let r = img_w - z;
                    res2 += r * r;
                }
                // primal residual in original (unscaled) units
                primal_inf = primal_inf.max(op.scale * res2.sqrt());
                img_scale = img_scale
                    .max(op.scale * img.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
                dual_scale = dual_scale.max(
                    self.y[k].iter().fold(0.0_f64, |m, v| m.max(v.abs())) / op.scale,
                );
                // dual residual: sigma ||G_k^T (z+ - z)|| in scaled space
                let dz: Vec<f64> =
                    z_new.iter().zip(&self.z[k]).map(|(a, b)| a - b).collect();
                let back = op.apply_t(&dz);
                let dual = back.iter().map(|v| v * v).sum::<f64>().sqrt();
                dual_inf = dual_inf.max(sigma * dual);
                self.z[k] = z_new;
            }

            let obj = self.objective(&self.x, b);
            let rel_change = (obj - prev_obj).abs() / (1.0 + obj.abs());
            prev_obj = obj;
            // residual gates are relative to the natural scales of the
            // images and multipliers; the absolute cap keeps divergent
            // (infeasible) iterates from passing on scale inflation alone
            if iter >= 2
                && primal_inf <= opts.tol_feas * img_scale
                && primal_inf <= 1e-3 * (1.0 + b_inf)
                && dual_inf <= opts.tol_dual * dual_scale.max(img_scale)
                && rel_change <= opts.tol_obj
            {
                converged = true;
                break;
            }

            // residual balancing: keep the primal and dual residuals within a
            // decade of each other (deterministic; refactorizes on change)
            if iter % ADAPT_PERIOD == 0 {
                let sigma_now = self.sigma;
                if primal_inf > 10.0 * dual_inf && sigma_now < 1e8 {
                    self.set_sigma(sigma_now * 2.0)?;
                } else if dual_inf > 10.0 * primal_inf && sigma_now > 1e-8 {
                    self.set_sigma(sigma_now * 0.5)?;
                }
            }

            // Active-face polish: once the faces are identified, the reduced
            // equality-constrained QP is solved exactly and certified. This
            // sidesteps the sublinear splitting tail on degenerate solutions.
            let newton_due = iter == 1
                || (iter % NEWTON_PERIOD == 0 && primal_inf <= NEWTON_TRIGGER * (1.0 + b_inf))
                || iter % (10 * NEWTON_PERIOD) == 0;
            if newton_due && self.try_newton(b, opts).unwrap_or(false) {
                converged = true;
                break;
            }

            // infeasibility heuristic: stalled primal + diverging dual
            let dual_norm: f64 = self
                .y
                .iter()
                .map(|y| y.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            if primal_inf < 0.99 * window_min {
                window_min = primal_inf;
                stall_count = 0;
                stall_dual0 = dual_norm.max(1e-12);
            } else if primal_inf > STALL_LEVEL {
                if stall_count == 0 {
                    stall_dual0 = dual_norm.max(1e-12);
                }
                stall_count += 1;
                if stall_count >= STALL_SPAN && dual_norm > 10.0 * stall_dual0 {
                    return Err(ConeQpError::Infeasible {
                        summary: format!(
                            "primal residual {primal_inf:.3e} stalled above {STALL_LEVEL:.0e} for \
                             {stall_count} iterations while the dual norm grew from \
                             {stall_dual0:.3e} to {dual_norm:.3e}"
                        ),
                    });
                }
            } else {
                stall_count = 0;
            }
        }

        self.result(b, iterations, converged)
    }

    /// Semismooth Newton finisher on the projection form of the KKT system:
    ///
    /// ```text
    /// G_k x + g_k - proj(W_k) = 0          (cone consistency)
    /// Hq x + lin + sum_k G_k^T (W_k - proj(W_k)) = 0   (stationarity)
    /// ```
    ///
    /// in symmetric (svec) coordinates, with the Loewner derivative of the
    /// PSD projection as generalized Jacobian. Solutions are exact KKT
    /// points: the multipliers `W_k - proj(W_k)` are negative semidefinite
    /// and complementary by construction, so no separate certification is
    /// needed. Returns `true` and jumps the internal state on success.
    fn try_newton(&mut self, b: &[f64], opts: &ConeQpOptions) -> Result<bool, ConeQpError> {
        let p = self.prob.dims.p;
        if self.newton.is_none() {
            self.newton = Some(self.build_newton_data());
        }
        let nd = self.newton.as_ref().expect("just built");
        let sp = nd.sp;
        let total: usize = sp + nd.sns.iter().sum::<usize>();
        // proximal-point regularization schedule: each round solves a
        // mu-strongly-convex surrogate (BD-regular for the semismooth
        // Newton); the true KKT residual at the round's solution is
        // mu * ||x - anchor|| and collapses as mu shrinks
        let mu_base = 1e-3 * (1.0 + self.rho + self.id_weight);

        // lin = c - rho M^T b - w_id anchor, projected to svec coordinates
        let lin: Vec<f64> = {
            let mut t = self.apply_mt(b);
            for ((t, c), a) in t.iter_mut().zip(&self.c).zip(&self.id_anchor) {
                *t = c - self.rho * *t - self.id_weight * a;
            }
            t
        };
        let lin_sv = svec_of_full(&lin, p);

        // initial point: current primal and W_k = X_k + nu_k in original units
        let mut xi = svec_of_full(&self.x, p);
        let mut ws: Vec<Vec<f64>> = Vec::with_capacity(self.n_cones());
        for k in 0..self.n_cones() {
            let op = &self.ops[k];
            let w_full: Vec<f64> = self.z[k]
                .iter()
                .zip(&self.y[k])
                .map(|(z, y)| op.scale * z + y / op.scale)
                .collect();
            ws.push(svec_of_full(&w_full, op.side));
        }

        // scale-aware gate: absolute in the data scale plus a relative part
        // for instances whose witnesses and multipliers are legitimately
        // large
        let lin_inf = lin_sv.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let x_inf = self.x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let y_inf = self
            .y
            .iter()
            .zip(&self.ops)
            .map(|(y, op)| y.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / op.scale)
            .fold(0.0_f64, f64::max);
        let rel = opts.tol_dual.clamp(1e-12, 1e-8);
        let tol = 1e-10 * (1.0 + lin_inf) + rel * ((1.0 + self.rho).sqrt() * x_inf + y_inf);

        let eval = |xi: &[f64],
                    ws: &[Vec<f64>],
                    mu: f64,
                    anchor: &[f64]|
         -> Result<(Vec<f64>, Vec<ProjData>), ConeQpError> {
            let x_full = unsvec_to_full(xi, p);
            let mut projs = Vec::with_capacity(self.n_cones());
            let mut f = vec![0.0; total];
            // stationarity part (with the proximal regularizer)
            let hx = self.hq_times(&x_full);
            let mut stat_full: Vec<f64> =
                hx.iter().zip(&lin).map(|(h, l)| h + l).collect();
            if mu > 0.0 {
                let anchor_full = unsvec_to_full(anchor, p);
                for (s, (x, a)) in stat_full.iter_mut().zip(x_full.iter().zip(&anchor_full)) {
                    *s += mu * (x - a);
                }
            }
            let mut at = sp;
            for k in 0..self.n_cones() {
                let op = &self.ops[k];
                let side = op.side;
                let proj = ProjData::new(&ws[k], side)?;
                // cone consistency rows
                let img_full = if k == 0 {
                    x_full.clone()
                } else {
                    self.prob.cone_maps[k - 1].apply(&x_full)
                };
                let img_sv = svec_of_full(&img_full, side);
                for (i, (iv, pv)) in img_sv.iter().zip(&proj.pi_sv).enumerate() {
                    f[at + i] = iv - pv;
                }
                // stationarity contribution of nu_k = W_k - proj(W_k)
                let nu_sv: Vec<f64> =
                    ws[k].iter().zip(&proj.pi_sv).map(|(w, pv)| w - pv).collect();
                let nu_full = unsvec_to_full(&nu_sv, side);
                let back = if k == 0 {
                    nu_full
                } else {
                    self.prob.cone_maps[k - 1].h.tr_matvec(&nu_full)
                };
                for (s, v) in stat_full.iter_mut().zip(&back) {
                    *s += v;
                }
                at += proj.pi_sv.len();
                projs.push(proj);
            }
            let stat_sv = svec_of_full(&stat_full, p);
            f[..sp].copy_from_slice(&stat_sv);
            Ok((f, projs))
        };

        let norm_inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

        // Outer proximal-point rounds around a damped semismooth Newton
        // inner loop. Round 0 attacks the unregularized system; subsequent
        // rounds solve mu-regularized surrogates (BD-regular), re-anchoring
        // and shrinking mu. The true residual is probed after each round.
        let mut anchor = xi.clone();
        let mut accepted = false;
        let mut mu = 0.0_f64;
        // absolute sanity cap: infeasible instances inflate the scales (and
        // with them `tol`) without ever making the residual genuinely small
        let tol = tol.min(1e-4 * (1.0 + lin_inf));
        let (mut f, mut projs) = eval(&xi, &ws, mu, &anchor)?;
        let mut f_norm = norm_inf(&f);
        if f_norm <= tol {
            accepted = true;
        }
        let mut damping = 0.0_f64;
        'rounds: for round in 0..NEWTON_ROUNDS {
            if accepted {
                break;
            }
            let step_budget = if round == 0 { 40 } else { 25 };
            // inner damped Newton on the current surrogate
            for _step in 0..step_budget {
                let surrogate_gate = if mu > 0.0 { (0.01 * mu).max(tol) } else { tol };
                if f_norm <= surrogate_gate {
                    break;
                }
                // assemble the Jacobian at the current projections
                let mut jac = DenseMatrix::zeros(total, total);
                jac.set_block(0, 0, &nd.hq_sym);
                let mut at = sp;
                for k in 0..self.n_cones() {
                    let snk = nd.sns[k];
                    let dpi = projs[k].dpi(self.ops[k].side);
                    jac.set_block(at, 0, &nd.s_mats[k]);
                    jac.set_block(at, at, &dpi.scale(-1.0));
                    let i_minus = DenseMatrix::identity(snk).sub(&dpi);
                    let st_block = nd.s_mats[k].transpose().matmul(&i_minus);
                    jac.set_block(0, at, &st_block);
                    at += snk;
                }
                for i in 0..sp {
                    jac.set(i, i, jac.get(i, i) + mu);
                }

                // damped step: raise the shift until ||F|| decreases
                let mut improved = false;
                loop {
                    let mut shifted = jac.clone();
                    for i in 0..total {
                        shifted.set(i, i, shifted.get(i, i) + 1e-12 + damping);
                    }
                    let lu = match LuFactor::new(&shifted) {
                        Ok(fac) => fac,
                        Err(_) => break 'rounds,
                    };
                    let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
                    let delta = lu.solve(&neg_f);
                    let mut t = 1.0_f64;
                    for _ in 0..10 {
                        let xi_t: Vec<f64> = xi
                            .iter()
                            .zip(&delta[..sp])
                            .map(|(x, d)| x + t * d)
                            .collect();
                        let mut ws_t = ws.clone();
                        let mut at2 = sp;
                        for (k, w) in ws_t.iter_mut().enumerate() {
                            let snk = nd.sns[k];
                            for (wi, di) in w.iter_mut().zip(&delta[at2..at2 + snk]) {
                                *wi += t * di;
                            }
                            at2 += snk;
                        }
                        if let Ok((f_t, projs_t)) = eval(&xi_t, &ws_t, mu, &anchor) {
                            let n_t = norm_inf(&f_t);
                            if n_t < (1.0 - 1e-4 * t) * f_norm {
                                xi = xi_t;
                                ws = ws_t;
                                f = f_t;
                                projs = projs_t;
                                f_norm = n_t;
                                improved = true;
                                break;
                            }
                        }
                        t *= 0.5;
                    }
                    if improved {
                        damping = if damping < 1e-10 { 0.0 } else { damping * 0.25 };
                        break;
                    }
                    damping = if damping == 0.0 { 1e-6 } else { damping * 10.0 };
                    if damping > 1e6 {
                        break;
                    }
                }
                if !improved {
                    break;
                }
            }

            // probe the true (unregularized) residual
            let f0_norm = eval(&xi, &ws, 0.0, &anchor).map(|(f0, _)| norm_inf(&f0))?;
            if f0_norm <= tol {
                accepted = true;
                break;
            }
            // re-anchor and tighten the surrogate
            anchor = xi.clone();
            mu = if mu == 0.0 { mu_base } else { mu * 0.2 };
            let fresh = eval(&xi, &ws, mu, &anchor)?;
            f = fresh.0;
            projs = fresh.1;
            f_norm = norm_inf(&f);
        }
        let _ = damping;
        let _ = f_norm;
        // measure the true residual of the final iterate; adopt it into the
        // splitting state whenever it clearly improves on the incumbent, so
        // partial Newton progress compounds with the splitting instead of
        // being discarded
        let (f_final, projs_final) = eval(&xi, &ws, 0.0, &anchor)?;
        let f_final_norm = norm_inf(&f_final);
        let incumbent = {
            let xi0 = svec_of_full(&self.x, p);
            let mut ws0: Vec<Vec<f64>> = Vec::with_capacity(self.n_cones());
            for k in 0..self.n_cones() {
                let op = &self.ops[k];
                let w_full: Vec<f64> = self.z[k]
                    .iter()
                    .zip(&self.y[k])
                    .map(|(z, y)| op.scale * z + y / op.scale)
                    .collect();
                ws0.push(svec_of_full(&w_full, op.side));
            }
            eval(&xi0, &ws0, 0.0, &anchor).map(|(f0, _)| norm_inf(&f0)).unwrap_or(f64::INFINITY)
        };
        if !accepted {
            if f_final_norm < 0.5 * incumbent {
                self.adopt_newton(&xi, &ws, &projs_final, &lin, p)?;
            }
            return Ok(false);
        }
        let projs = projs_final;

        self.adopt_newton(&xi, &ws, &projs, &lin, p)?;
        Ok(true)
    }

    /// Write a Newton iterate back into the splitting state: primal from
    /// `xi`, duplicates from the projections, multipliers from
    /// `W_k - proj(W_k)` (negative semidefinite and complementary by
    /// construction); the antisymmetric stationarity remainder folds into
    /// the W-cone multiplier.
    fn adopt_newton(
        &mut self,
        xi: &[f64],
        ws: &[Vec<f64>],
        projs: &[ProjData],
        lin: &[f64],
        p: usize,
    ) -> Result<(), ConeQpError> {
        self.x = unsvec_to_full(xi, p);
        let mut stat_full: Vec<f64> = {
            let hx = self.hq_times(&self.x);
            hx.iter().zip(lin).map(|(h, l)| h + l).collect()
        };
        for k in 0..self.n_cones() {
            let op = &self.ops[k];
            let side = op.side;
            let proj = &projs[k];
            let nu_sv: Vec<f64> =
                ws[k].iter().zip(&proj.pi_sv).map(|(w, pv)| w - pv).collect();
            let nu_full = unsvec_to_full(&nu_sv, side);
            let back = if k == 0 {
                nu_full.clone()
            } else {
                self.prob.cone_maps[k - 1].h.tr_matvec(&nu_full)
            };
            for (s, v) in stat_full.iter_mut().zip(&back) {
                *s += v;
            }
            self.z[k] = unsvec_to_full(&proj.pi_sv, side)
                .iter()
                .map(|v| v / op.scale)
                .collect();
            self.y[k] = nu_full.iter().map(|v| v * op.scale).collect();
        }
        // cancel the antisymmetric stationarity remainder through y_0
        for i in 0..p {
            for j in 0..p {
                let anti = 0.5 * (stat_full[j * p + i] - stat_full[i * p + j]);
                self.y[0][j * p + i] -= anti;
            }
        }
        Ok(())
    }

    fn hq_times(&self, v: &[f64]) -> Vec<f64> {
        let mut out = match self.coupling {
            Coupling::Affine => self.prob.apply_at(&self.prob.apply_a(v)),
            Coupling::Identity => v.to_vec(),
        };
        for (o, vi) in out.iter_mut().zip(v) {
            *o = self.rho * *o + self.id_weight * vi;
        }
        out
    }

    fn build_newton_data(&self) -> NewtonData {
        let p = self.prob.dims.p;
        let sp = p * (p + 1) / 2;
        let sns: Vec<usize> =
            self.ops.iter().map(|op| op.side * (op.side + 1) / 2).collect();
        // Hq in svec coordinates
        let mut hq_sym = DenseMatrix::zeros(sp, sp);
        for j in 0..sp {
            let mut e = vec![0.0; sp];
            e[j] = 1.0;
            let full = unsvec_to_full(&e, p);
            let col = svec_of_full(&self.hq_times(&full), p);
            for i in 0..sp {
                hq_sym.set(i, j, col[i]);
            }
        }
        // S_k: svec-coordinate cone maps
        let mut s_mats = Vec::with_capacity(self.ops.len());
        for (k, op) in self.ops.iter().enumerate() {
            let snk = op.side * (op.side + 1) / 2;
            let mut s = DenseMatrix::zeros(snk, sp);
            for j in 0..sp {
                let mut e = vec![0.0; sp];
                e[j] = 1.0;
                let full = unsvec_to_full(&e, p);
                let img = if k == 0 {
                    full
                } else {
                    self.prob.cone_maps[k - 1].h.matvec(&full)
                };
                let col = svec_of_full(&img, op.side);
                for i in 0..snk {
                    s.set(i, j, col[i]);
                }
            }
            s_mats.push(s);
        }
        NewtonData { sp, sns, s_mats, hq_sym }
    }


    fn result(
        &self,
        b: &[f64],
        iterations: usize,
        converged: bool,
    ) -> Result<ConeQpResult, ConeQpError> {
        // recompute per-cone infeasibility from the returned iterate, in the
        // original (unscaled) cone coordinates
        let mut primal_residuals = Vec::with_capacity(self.n_cones());
        let mut complementarity = Vec::with_capacity(self.n_cones());
        for k in 0..self.n_cones() {
            let op = &self.ops[k];
            let img: Vec<f64> = op.image(&self.x).iter().map(|v| v * op.scale).collect();
            let mat = SymMatrix::from_dense(&unvec_mat(&img, op.side, op.side)?);
            primal_residuals.push((-min_eig(&mat)?).max(0.0));
            let comp: f64 = self.y[k].iter().zip(&self.z[k]).map(|(y, z)| y * z).sum();
            complementarity.push(comp.abs());
        }
        // stationarity of the smooth part against the cone multipliers
        let mx = self.apply_m(&self.x);
        let mut grad: Vec<f64> =
            self.apply_mt(&mx.iter().zip(b).map(|(a, b)| self.rho * (a - b)).collect::<Vec<_>>());
        for ((g, c), (x, a)) in grad
            .iter_mut()
            .zip(&self.c)
            .zip(self.x.iter().zip(&self.id_anchor))
        {
            *g += c + self.id_weight * (x - a);
        }
        for k in 0..self.n_cones() {
            let back = self.ops[k].apply_t(&self.y[k]);
            for (g, v) in grad.iter_mut().zip(&back) {
                *g += v;
            }
        }
        let stationarity = grad.iter().map(|v| v * v).sum::<f64>().sqrt();

        // report multipliers in the original cone coordinates
        let cone_duals: Vec<Vec<f64>> = self
            .ops
            .iter()
            .zip(&self.y)
            .map(|(op, y)| y.iter().map(|v| v / op.scale).collect())
            .collect();

        Ok(ConeQpResult {
            w_tilde: self.x.clone(),
            objective: self.objective(&self.x, b),
            primal_residuals,
            iterations,
            converged,
            cone_duals,
            stationarity,
            complementarity,
        })
    }
}

/// Precomputed svec-coordinate operators for the Newton finisher.
#[derive(Debug)]
struct NewtonData {
    sp: usize,
    sns: Vec<usize>,
    s_mats: Vec<DenseMatrix>,
    hq_sym: DenseMatrix,
}

/// PSD projection value and Loewner differential data at one point.
struct ProjData {
    values: Vec<f64>,
    vectors: DenseMatrix,
    pi_sv: Vec<f64>,
}

impl ProjData {
    fn new(w_sv: &[f64], side: usize) -> Result<Self, ConeQpError> {
        let full = unsvec_to_full(w_sv, side);
        let m = SymMatrix::from_dense(&unvec_mat(&full, side, side)?);
        let e = crate::linalg::sym_eig(&m)?;
        // projection value
        let mut pi = DenseMatrix::zeros(side, side);
        for k in 0..side {
            let lam = e.values[k].max(0.0);
            if lam == 0.0 {
                continue;
            }
            for i in 0..side {
                let vik = e.vectors.get(i, k);
                for j in 0..side {
                    let cur = pi.get(i, j);
                    pi.set(i, j, cur + lam * vik * e.vectors.get(j, k));
                }
            }
        }
        Ok(Self {
            values: e.values,
            vectors: e.vectors,
            pi_sv: svec_of_full(&vec_mat(&pi), side),
        })
    }

    /// Loewner derivative of the PSD projection as an svec-coordinate matrix.
    fn dpi(&self, side: usize) -> DenseMatrix {
        let sn = side * (side + 1) / 2;
        let omega = DenseMatrix::from_fn(side, side, |i, j| {
            let (li, lj) = (self.values[i], self.values[j]);
            if (li - lj).abs() > 1e-14 * (1.0 + li.abs() + lj.abs()) {
                (li.max(0.0) - lj.max(0.0)) / (li - lj)
            } else if li > 0.0 {
                1.0
            } else if li.abs() <= 1e-14 {
                // generalized Jacobian selection at the kink
                0.5
            } else {
                0.0
            }
        });
        let u = &self.vectors;
        let mut out = DenseMatrix::zeros(sn, sn);
        for col in 0..sn {
            let mut e = vec![0.0; sn];
            e[col] = 1.0;
            let h_full = unsvec_to_full(&e, side);
            let h = unvec_mat(&h_full, side, side).expect("svec basis is square");
            let inner = u.transpose().matmul(&h).matmul(u);
            let scaled = DenseMatrix::from_fn(side, side, |i, j| omega.get(i, j) * inner.get(i, j));
            let back = u.matmul(&scaled).matmul(&u.transpose());
            let col_sv = svec_of_full(&vec_mat(&back), side);
            for row in 0..sn {
                out.set(row, col, col_sv[row]);
            }
        }
        out
    }
}

/// Orthonormal symmetric vectorization of a full column-major square vec:
/// diagonal entries as-is, off-diagonals scaled by sqrt(2) (the
/// antisymmetric part is discarded).
fn svec_of_full(full: &[f64], side: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(side * (side + 1) / 2);
    let rt2 = std::f64::consts::SQRT_2;
    for j in 0..side {
        for i in j..side {
            let a = full[j * side + i];
            let b = full[i * side + j];
            if i == j {
                out.push(a);
            } else {
                out.push(0.5 * (a + b) * rt2);
            }
        }
    }
    out
}

/// Inverse of [`svec_of_full`] (produces an exactly symmetric full vec).
fn unsvec_to_full(sv: &[f64], side: usize) -> Vec<f64> {
    let mut out = vec![0.0; side * side];
    let inv_rt2 = 1.0 / std::f64::consts::SQRT_2;
    let mut at = 0;
    for j in 0..side {
        for i in j..side {
            let v = sv[at];
            at += 1;
            if i == j {
                out[j * side + i] = v;
            } else {
                out[j * side + i] = v * inv_rt2;
                out[i * side + j] = v * inv_rt2;
            }
        }
    }
    out
}

fn project_psd_vec(v: &[f64], side: usize) -> Result<Vec<f64>, ConeQpError> {
    let mat = SymMatrix::from_dense(&unvec_mat(v, side, side)?);
    let proj = psd_project(&mat)?;
    Ok(vec_mat(&proj.to_dense()))
}

/// Solve a one-shot instance (no warm start reuse).
pub fn solve_cone_qp(
    inst: &ConeQpInstance<'_>,
    opts: &ConeQpOptions,
) -> Result<ConeQpResult, ConeQpError> {
    let b = inst.b.clone();
    let mut solver = ConeQpSolver::from_instance(inst)?;
    solver.solve(&b, opts)
}

/// Result of one `prox_{eta phi_1}` evaluation.
#[derive(Debug, Clone)]
pub struct PhiProxResult {
    /// `u = A w~`, the prox point in the `s` space.
    pub u: Vec<f64>,
    /// Witness minimizer of `f(w~) + ||A w~ - s||^2 / (2 eta)`.
    pub w_tilde: Vec<f64>,
    /// `phi_1` at the prox point, i.e. `<vec(R), w~>`.
    pub value: f64,
    pub qp: ConeQpResult,
}

/// Proximal map of the epi-composition `phi_1 = (A f)`:
/// minimize `f(w~) + ||A w~ - s||^2 / (2 eta)` over the cones and return
/// `u = A w~` with its witness.
pub fn prox_phi1(
    s: &[f64],
    eta: f64,
    prob: &SfLqProblem,
    opts: &ConeQpOptions,
) -> Result<PhiProxResult, ConeQpError> {
    if eta <= 0.0 || !eta.is_finite() {
        return Err(ConeQpError::Invalid(format!("eta must be > 0, got {eta}")));
    }
    let mut solver = ConeQpSolver::new_affine(prob, 1.0 / eta)?;
    phi_prox_with(&mut solver, s, prob, opts)
}

/// Same as [`prox_phi1`] but reusing a warm solver (outer loops hold one).
pub fn phi_prox_with(
    solver: &mut ConeQpSolver<'_>,
    s: &[f64],
    prob: &SfLqProblem,
    opts: &ConeQpOptions,
) -> Result<PhiProxResult, ConeQpError> {
    let qp = solver.solve(s, opts)?;
    let u = prob.apply_a(&qp.w_tilde);
    let value = prob.lq_objective(&qp.w_tilde);
    Ok(PhiProxResult { u, w_tilde: qp.w_tilde.clone(), value, qp })
}

/// Gradient of `phi_1` recovered from the prox relation
/// `s = u + eta gradphi_1(u)`.
pub fn grad_phi1_from_prox(s: &[f64], u: &[f64], eta: f64) -> Vec<f64> {
    s.iter().zip(u).map(|(s, u)| (s - u) / eta).collect()
}

/// `prox_{beta^{-1} f}(x)`: minimize `f(w~) + (beta/2)||w~ - x||^2` over the
/// cones (identity coupling).
pub fn prox_f(
    x: &[f64],
    beta: f64,
    prob: &SfLqProblem,
    opts: &ConeQpOptions,
) -> Result<Vec<f64>, ConeQpError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(ConeQpError::Invalid(format!("beta must be > 0, got {beta}")));
    }
    let mut solver = ConeQpSolver::new_identity(prob, beta)?;
    Ok(solver.solve(x, opts)?.w_tilde)
}
