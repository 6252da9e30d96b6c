//! Plant validation and assembly of the vectorized constrained problem.
//!
//! From plant data `(A, B2, B1, C, D)` and a block partition of the gain,
//! this module builds the data of
//!
//! ```text
//! min <vec(R), W~> + gamma ||vec^{-1}(P~)||_{s,t;0}
//! s.t. A W~ + B P~ = 0,   W in PSD(p),   Psi_i(W) in PSD(n),
//! ```
//!
//! where the rows of `A` encode the off-block-diagonal constraints
//! `-V_{j1} W V_{j2} = 0` followed by the coupling block `V1 W V2^T = P`.

use crate::linalg::{
    kron, min_eig, sym_eig, unvec_mat, vec_mat, DenseMatrix, LinAlgError, SymMatrix,
};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    Dimension(String),
    Invalid(String),
    Numeric(String),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimension(m) => write!(f, "dimension error: {m}"),
            Self::Invalid(m) => write!(f, "invalid input: {m}"),
            Self::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for ProblemError {}

impl From<LinAlgError> for ProblemError {
    fn from(e: LinAlgError) -> Self {
        ProblemError::Numeric(e.to_string())
    }
}

/// LTI plant instance plus the uncertainty vertex list of Assumption 2.
#[derive(Debug, Clone)]
pub struct SystemData {
    pub a: DenseMatrix,
    pub b2: DenseMatrix,
    pub b1: DenseMatrix,
    pub c: DenseMatrix,
    pub d: DenseMatrix,
    /// Vertices `(A_i, B2_i)`; vertex 1 is the nominal pair.
    pub vertices: Vec<(DenseMatrix, DenseMatrix)>,
}

impl SystemData {
    /// Nominal system (single vertex).
    pub fn new(
        a: DenseMatrix,
        b2: DenseMatrix,
        b1: DenseMatrix,
        c: DenseMatrix,
        d: DenseMatrix,
    ) -> Result<Self, ProblemError> {
        let vertices = vec![(a.clone(), b2.clone())];
        Self::with_vertices(a, b2, b1, c, d, vertices)
    }

    pub fn with_vertices(
        a: DenseMatrix,
        b2: DenseMatrix,
        b1: DenseMatrix,
        c: DenseMatrix,
        d: DenseMatrix,
        vertices: Vec<(DenseMatrix, DenseMatrix)>,
    ) -> Result<Self, ProblemError> {
        let n = a.rows();
        if !a.is_square() {
            return Err(ProblemError::Dimension("A must be square".into()));
        }
        if b2.rows() != n {
            return Err(ProblemError::Dimension("B2 row count must match A".into()));
        }
        if b1.rows() != n {
            return Err(ProblemError::Dimension("B1 row count must match A".into()));
        }
        if c.cols() != n {
            return Err(ProblemError::Dimension("C column count must match A".into()));
        }
        if d.rows() != c.rows() || d.cols() != b2.cols() {
            return Err(ProblemError::Dimension("D must be q x m".into()));
        }
        if vertices.is_empty() {
            return Err(ProblemError::Invalid("vertex list must be nonempty".into()));
        }
        for (i, (ai, b2i)) in vertices.iter().enumerate() {
            if ai.rows() != n || !ai.is_square() || b2i.rows() != n || b2i.cols() != b2.cols() {
                return Err(ProblemError::Dimension(format!("vertex {} has wrong shape", i + 1)));
            }
        }
        Ok(Self { a, b2, b1, c, d, vertices })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b2.cols()
    }

    /// Same plant with `A + sigma I` (all vertices shifted alike). Useful for
    /// constructing Hurwitz variants of a marginally stable plant.
    pub fn shifted(&self, sigma: f64) -> Self {
        let shift = |m: &DenseMatrix| {
            let mut out = m.clone();
            for i in 0..m.rows() {
                out.set(i, i, m.get(i, i) + sigma);
            }
            out
        };
        Self {
            a: shift(&self.a),
            b2: self.b2.clone(),
            b1: self.b1.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            vertices: self.vertices.iter().map(|(a, b)| (shift(a), b.clone())).collect(),
        }
    }
}

/// Row/column block sizes of the gain partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
}

impl BlockPartition {
    pub fn new(row_sizes: Vec<usize>, col_sizes: Vec<usize>) -> Result<Self, ProblemError> {
        if row_sizes.is_empty() || col_sizes.is_empty() {
            return Err(ProblemError::Invalid("partition must be nonempty".into()));
        }
        if row_sizes.iter().any(|&s| s == 0) || col_sizes.iter().any(|&s| s == 0) {
            return Err(ProblemError::Invalid("block sizes must be >= 1".into()));
        }
        Ok(Self { row_sizes, col_sizes })
    }

    pub fn m(&self) -> usize {
        self.row_sizes.iter().sum()
    }

    pub fn n(&self) -> usize {
        self.col_sizes.iter().sum()
    }

    pub fn s(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn t(&self) -> usize {
        self.col_sizes.len()
    }
}

/// Column-major index sets of the blocks of an `m x n` matrix, ordered by the
/// flattening `l = i + s (j - 1)` (zero-based here: `l = i + s * j`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockIndex {
    sets: Vec<Vec<usize>>,
    s: usize,
    t: usize,
    len: usize,
}

impl BlockIndex {
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn num_blocks(&self) -> usize {
        self.sets.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Total vector length `m * n` covered by the index sets.
    pub fn vec_len(&self) -> usize {
        self.len
    }
}

/// Build the block index sets for `vec(P)` of an `m x n` matrix under `part`.
pub fn build_block_index(part: &BlockPartition) -> BlockIndex {
    let m = part.m();
    let (s, t) = (part.s(), part.t());
    let row_off = offsets(&part.row_sizes);
    let col_off = offsets(&part.col_sizes);
    let mut sets = vec![Vec::new(); s * t];
    for j in 0..t {
        for i in 0..s {
            let l = i + s * j;
            let set = &mut sets[l];
            for c in col_off[j]..col_off[j] + part.col_sizes[j] {
                for r in row_off[i]..row_off[i] + part.row_sizes[i] {
                    set.push(c * m + r);
                }
            }
        }
    }
    BlockIndex { sets, s, t, len: m * part.n() }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &s in sizes {
        out.push(acc);
        acc += s;
    }
    out
}

/// Binary block indicator: entry `l` is true iff the sup-norm of block `l`
/// exceeds `tol`.
pub fn pi_indicator(p_vec: &[f64], idx: &BlockIndex, tol: f64) -> Vec<bool> {
    idx.sets()
        .iter()
        .map(|set| set.iter().any(|&k| p_vec[k].abs() > tol))
        .collect()
}

/// Number of nonzero blocks at tolerance `tol` (the group l0-norm).
pub fn group_l0_count(p_vec: &[f64], idx: &BlockIndex, tol: f64) -> usize {
    pi_indicator(p_vec, idx, tol).iter().filter(|&&b| b).count()
}

/// Ordered pairs `(xi(j), kappa(j))`, zero-based: all `(i1, i2)` with
/// `i1 < i2 < t`, grouped by `i1` ascending then `i2` ascending.
pub fn xi_kappa(t: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(t * (t.max(1) - 1) / 2);
    for i1 in 0..t.saturating_sub(1) {
        for i2 in (i1 + 1)..t {
            pairs.push((i1, i2));
        }
    }
    pairs
}

/// Augmented matrices `F_i`, `G`, `Q`, `R` of the parameterization.
#[derive(Debug, Clone)]
pub struct AugmentedData {
    /// One `F_i = [A_i, B2_i; 0, 0]` per vertex.
    pub f: Vec<DenseMatrix>,
    pub g: DenseMatrix,
    pub q: SymMatrix,
    pub r: SymMatrix,
}

/// Assemble `F_i = [A_i, B2_i; 0, 0]`, `G = [0; I_m]`,
/// `Q = blockdiag(B1 B1^T, 0)`, `R = blockdiag(C^T C, D^T D)`.
pub fn build_augmented(sys: &SystemData) -> AugmentedData {
    let n = sys.state_dim();
    let m = sys.input_dim();
    let p = n + m;
    let f = sys
        .vertices
        .iter()
        .map(|(ai, b2i)| {
            let mut fi = DenseMatrix::zeros(p, p);
            fi.set_block(0, 0, ai);
            fi.set_block(0, n, b2i);
            fi
        })
        .collect();
    let mut g = DenseMatrix::zeros(p, m);
    g.set_block(n, 0, &DenseMatrix::identity(m));
    let mut q = DenseMatrix::zeros(p, p);
    q.set_block(0, 0, &sys.b1.matmul(&sys.b1.transpose()));
    let mut r = DenseMatrix::zeros(p, p);
    r.set_block(0, 0, &sys.c.transpose().matmul(&sys.c));
    r.set_block(n, n, &sys.d.transpose().matmul(&sys.d));
    AugmentedData { f, g, q: SymMatrix::from_dense(&q), r: SymMatrix::from_dense(&r) }
}

/// Outcome of a single assumption check.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Per-condition report for Assumption 1. Violations are warnings, not hard
/// errors: the solver runs regardless (Example 1 itself violates `C^T C > 0`).
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const PD_TOL: f64 = 1e-10;

/// Check the standing assumptions: `C^T D = 0`, `D^T D > 0`, `C^T C > 0`,
/// `B1 B1^T > 0`, and stabilizability of `(A, B2)` by a PBH rank test over
/// the eigenvalues of `A` with nonnegative real part.
pub fn validate_assumptions(sys: &SystemData) -> Result<ValidationReport, ProblemError> {
    let mut checks = Vec::new();

    let ctd = sys.c.transpose().matmul(&sys.d);
    let ctd_max = ctd.max_abs();
    checks.push(AssumptionCheck {
        name: "ct_d_zero",
        passed: ctd_max <= PD_TOL,
        detail: format!("max |C^T D| = {ctd_max:.3e}"),
    });

    let mut pd_check = |name: &'static str, mat: DenseMatrix| -> Result<(), ProblemError> {
        let me = min_eig(&SymMatrix::from_dense(&mat))?;
        checks.push(AssumptionCheck {
            name,
            passed: me > PD_TOL,
            detail: format!("min eigenvalue = {me:.3e}"),
        });
        Ok(())
    };
    pd_check("dt_d_pd", sys.d.transpose().matmul(&sys.d))?;
    pd_check("ct_c_pd", sys.c.transpose().matmul(&sys.c))?;
    pd_check("b1_b1t_pd", sys.b1.matmul(&sys.b1.transpose()))?;

    let stab = stabilizable(&sys.a, &sys.b2)?;
    checks.push(AssumptionCheck {
        name: "stabilizable",
        passed: stab.0,
        detail: stab.1,
    });

    Ok(ValidationReport { checks })
}

/// PBH test: `(A, B2)` is stabilizable iff `[A - lambda I, B2]` has full row
/// rank at every eigenvalue with `Re(lambda) >= 0`.
fn stabilizable(a: &DenseMatrix, b2: &DenseMatrix) -> Result<(bool, String), ProblemError> {
    let n = a.rows();
    let eigs = crate::linalg::eigenvalues(a)?;
    for &(re, im) in &eigs {
        if re < -1e-9 {
            continue;
        }
        // real 2n x 2(n+m) lift of [A - lambda I, B2]; full complex row rank n
        // iff the lift has real rank 2n.
        let npm = n + b2.cols();
        let mut lift = DenseMatrix::zeros(2 * n, 2 * npm);
        let a_sh = DenseMatrix::from_fn(n, n, |i, j| a.get(i, j) - if i == j { re } else { 0.0 });
        lift.set_block(0, 0, &a_sh);
        lift.set_block(0, n, b2);
        lift.set_block(n, npm, &a_sh);
        lift.set_block(n, npm + n, b2);
        if im != 0.0 {
            let im_block = DenseMatrix::identity(n).scale(im);
            lift.set_block(0, npm, &im_block);
            lift.set_block(n, 0, &im_block.scale(-1.0));
        }
        let gram = SymMatrix::from_dense(&lift.matmul(&lift.transpose()));
        let e = sym_eig(&gram)?;
        let sigma_max = e.values[0].max(0.0).sqrt();
        let sigma_min = e.values.last().unwrap().max(0.0).sqrt();
        if sigma_min <= 1e-8 * sigma_max.max(1.0) {
            return Ok((
                false,
                format!("PBH rank deficient at lambda = {re:.4}{im:+.4}i"),
            ));
        }
    }
    Ok((true, "PBH full rank at all closed right-half-plane modes".into()))
}

/// Linear map onto one PSD cone: `vec(Psi_i) = H_i w~ + h_i`.
#[derive(Debug, Clone)]
pub struct ConeMap {
    pub h: DenseMatrix,
    pub offset: Vec<f64>,
    /// Side length of the matrix the image vectorizes.
    pub dim: usize,
}

impl ConeMap {
    pub fn apply(&self, w_tilde: &[f64]) -> Vec<f64> {
        let mut v = self.h.matvec(w_tilde);
        for (vi, oi) in v.iter_mut().zip(&self.offset) {
            *vi += oi;
        }
        v
    }
}

/// Problem dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub mn: usize,
    /// Row count of the off-block-diagonal constraint block of `A`.
    pub n_star: usize,
    /// Number of ordered block pairs `N = t(t-1)/2`.
    pub n_pairs: usize,
    pub vertices: usize,
}

impl Dims {
    /// Total row count of `A` (and length of the splitting variable `s`).
    pub fn rows(&self) -> usize {
        self.n_star + self.mn
    }
}

/// Assembled vectorized problem data, immutable once built.
#[derive(Debug, Clone)]
pub struct SfLqProblem {
    pub a_mat: DenseMatrix,
    pub b_mat: DenseMatrix,
    /// Linear cost `vec(R)`.
    pub cost: Vec<f64>,
    /// One PSD cone map per vertex.
    pub cone_maps: Vec<ConeMap>,
    /// Closed-loop vertex matrices the cone maps are generated by
    /// (`[A_i, -B2_i; 0, 0]`, so that `K = W2^T W1^{-1}` closes the loop as
    /// `A - B2 K`).
    pub f_cl: Vec<DenseMatrix>,
    pub q: SymMatrix,
    pub r: SymMatrix,
    pub dims: Dims,
    pub partition: BlockPartition,
    /// Index sets over `vec(P)` for the gain blocks.
    pub block_index: BlockIndex,
    pub gamma: f64,
}

/// Build the constraint data from a validated plant and partition.
pub fn build_constraints(
    sys: &SystemData,
    part: &BlockPartition,
    gamma: f64,
) -> Result<SfLqProblem, ProblemError> {
    let n = sys.state_dim();
    let m = sys.input_dim();
    if part.n() != n {
        return Err(ProblemError::Dimension(format!(
            "column block sizes sum to {} but the state dimension is {n}",
            part.n()
        )));
    }
    if part.m() != m {
        return Err(ProblemError::Dimension(format!(
            "row block sizes sum to {} but the input dimension is {m}",
            part.m()
        )));
    }
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(ProblemError::Invalid("gamma must be finite and >= 0".into()));
    }
    let p = n + m;
    let mn = m * n;
    let t = part.t();
    let pairs = xi_kappa(t);
    let col_off = offsets(&part.col_sizes);

    // state-part selector for column block i: n_i x p
    let selector = |i: usize| -> DenseMatrix {
        let ni = part.col_sizes[i];
        let mut v = DenseMatrix::zeros(ni, p);
        for k in 0..ni {
            v.set(k, col_off[i] + k, 1.0);
        }
        v
    };

    let n_star: usize = pairs.iter().map(|&(i1, i2)| part.col_sizes[i1] * part.col_sizes[i2]).sum();
    let rows = n_star + mn;

    let mut a_mat = DenseMatrix::zeros(rows, p * p);
    let mut row0 = 0;
    for &(i1, i2) in &pairs {
        let block = kron(&selector(i2), &selector(i1));
        a_mat.set_block(row0, 0, &block);
        row0 += part.col_sizes[i1] * part.col_sizes[i2];
    }
    // coupling block V2 (x) V1
    let mut v1 = DenseMatrix::zeros(m, p);
    for k in 0..m {
        v1.set(k, n + k, 1.0);
    }
    let mut v2 = DenseMatrix::zeros(n, p);
    for k in 0..n {
        v2.set(k, k, 1.0);
    }
    a_mat.set_block(n_star, 0, &kron(&v2, &v1));

    let mut b_mat = DenseMatrix::zeros(rows, mn);
    for k in 0..mn {
        b_mat.set(n_star + k, k, -1.0);
    }

    let aug = build_augmented(sys);
    let cost = vec_mat(&aug.r.to_dense());

    // Cone maps: vec(Psi_i) = H_i w~ + h_i with
    // H_i = -(V2 (x) V2)(I (x) F_i + F_i (x) I) and h_i = -vec(V2 Q V2^T).
    // The generating matrices negate the B2 block so that the recovered gain
    // K = W2^T W1^{-1} closes the loop as A - B2 K.
    let v2kron = kron(&v2, &v2);
    let eye_p = DenseMatrix::identity(p);
    let offset: Vec<f64> = v2kron.matvec(&vec_mat(&aug.q.to_dense())).iter().map(|v| -v).collect();
    let mut cone_maps = Vec::with_capacity(sys.vertices.len());
    let mut f_cl = Vec::with_capacity(sys.vertices.len());
    for (ai, b2i) in &sys.vertices {
        let mut fi = DenseMatrix::zeros(p, p);
        fi.set_block(0, 0, ai);
        fi.set_block(0, n, &b2i.scale(-1.0));
        let lyap_op = kron(&eye_p, &fi).add(&kron(&fi, &eye_p));
        let h = v2kron.matmul(&lyap_op).scale(-1.0);
        cone_maps.push(ConeMap { h, offset: offset.clone(), dim: n });
        f_cl.push(fi);
    }

    Ok(SfLqProblem {
        a_mat,
        b_mat,
        cost,
        cone_maps,
        f_cl,
        q: aug.q,
        r: aug.r,
        dims: Dims {
            n,
            m,
            p,
            mn,
            n_star,
            n_pairs: pairs.len(),
            vertices: sys.vertices.len(),
        },
        partition: part.clone(),
        block_index: build_block_index(part),
        gamma,
    })
}

impl SfLqProblem {
    pub fn apply_a(&self, w_tilde: &[f64]) -> Vec<f64> {
        self.a_mat.matvec(w_tilde)
    }

    pub fn apply_at(&self, s: &[f64]) -> Vec<f64> {
        self.a_mat.tr_matvec(s)
    }

    /// `A w~ + B p~`.
    pub fn affine_residual(&self, w_tilde: &[f64], p_tilde: &[f64]) -> Vec<f64> {
        let mut r = self.apply_a(w_tilde);
        for (k, v) in p_tilde.iter().enumerate() {
            r[self.dims.n_star + k] -= v;
        }
        r
    }

    /// Split a stacked vector into its `(first N*, last mn)` parts.
    pub fn split<'a>(&self, s: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        s.split_at(self.dims.n_star)
    }

    /// `Psi_i` as a symmetric matrix at the given iterate.
    pub fn psi(&self, i: usize, w_tilde: &[f64]) -> Result<SymMatrix, ProblemError> {
        let v = self.cone_maps[i].apply(w_tilde);
        let mat = unvec_mat(&v, self.dims.n, self.dims.n)?;
        Ok(SymMatrix::from_dense(&mat))
    }

    /// `W` as a symmetric matrix at the given iterate.
    pub fn w_mat(&self, w_tilde: &[f64]) -> Result<SymMatrix, ProblemError> {
        let mat = unvec_mat(w_tilde, self.dims.p, self.dims.p)?;
        Ok(SymMatrix::from_dense(&mat))
    }

    /// Total cone infeasibility `max(0, -min_eig(W)) + sum_i max(0, -min_eig(Psi_i))`.
    pub fn cone_violation(&self, w_tilde: &[f64]) -> Result<f64, ProblemError> {
        let mut total = (-min_eig(&self.w_mat(w_tilde)?)?).max(0.0);
        for i in 0..self.cone_maps.len() {
            total += (-min_eig(&self.psi(i, w_tilde)?)?).max(0.0);
        }
        Ok(total)
    }

    /// l1 norm of the off-block-diagonal entries of `W1` (the first `N*`
    /// coordinates of `A w~`).
    pub fn w1_off_block_abs_sum(&self, w_tilde: &[f64]) -> f64 {
        self.apply_a(w_tilde)[..self.dims.n_star].iter().map(|v| v.abs()).sum()
    }

    /// Objective `<vec(R), w~>`.
    pub fn lq_objective(&self, w_tilde: &[f64]) -> f64 {
        self.cost.iter().zip(w_tilde).map(|(c, w)| c * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> SystemData {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let b2 = DenseMatrix::from_rows(&[
            vec![0.9315, 0.7939],
            vec![0.9722, 0.1061],
            vec![0.5317, 0.7750],
        ])
        .unwrap();
        let b1 = DenseMatrix::identity(3);
        let c = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let d = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        SystemData::new(a, b2, b1, c, d).unwrap()
    }

    fn example1_partition() -> BlockPartition {
        BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap()
    }

    #[test]
    fn xi_kappa_enumeration() {
        assert_eq!(xi_kappa(2), vec![(0, 1)]);
        assert_eq!(xi_kappa(3), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(
            xi_kappa(4),
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        );
        assert!(xi_kappa(1).is_empty());
    }

    #[test]
    fn block_index_scalar_blocks() {
        let part = BlockPartition::new(vec![1, 1], vec![1, 1]).unwrap();
        let idx = build_block_index(&part);
        // zero-based positions of vec(P) for a 2x2 matrix
        assert_eq!(idx.sets(), &[vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn block_index_example1() {
        let idx = build_block_index(&example1_partition());
        // block (1,1): rows {0}, cols {0,1} of a 2x3 P -> vec positions {0, 2}
        assert_eq!(idx.sets()[0], vec![0, 2]);
        assert_eq!(idx.sets()[1], vec![1, 3]);
        assert_eq!(idx.sets()[2], vec![4]);
        assert_eq!(idx.sets()[3], vec![5]);
    }

    #[test]
    fn block_index_partitions_everything() {
        let part = BlockPartition::new(vec![2, 1], vec![1, 3, 1]).unwrap();
        let idx = build_block_index(&part);
        let mut seen = vec![false; 15];
        for set in idx.sets() {
            for &k in set {
                assert!(!seen[k], "index {k} appears twice");
                seen[k] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn pi_indicator_thresholds() {
        let idx = build_block_index(&example1_partition());
        assert_eq!(pi_indicator(&[0.0; 6], &idx, 1e-6), vec![false; 4]);
        // vec(K2^T stored as P = K2 in R^{2x3}): K2 = [[32.934,77.077,0],[0,0,1.354]]
        let k2 = DenseMatrix::from_rows(&[vec![32.934, 77.077, 0.0], vec![0.0, 0.0, 1.354]])
            .unwrap();
        let p_vec = vec_mat(&k2);
        assert_eq!(pi_indicator(&p_vec, &idx, 1e-6), vec![true, false, false, true]);
        assert_eq!(group_l0_count(&p_vec, &idx, 1e-6), 2);
        // single entry below tol stays zero
        let mut tiny = vec![0.0; 6];
        tiny[4] = 1e-9;
        assert_eq!(pi_indicator(&tiny, &idx, 1e-6), vec![false; 4]);
    }

    #[test]
    fn augmented_shapes_example1() {
        let sys = example1();
        let aug = build_augmented(&sys);
        let f = &aug.f[0];
        assert_eq!((f.rows(), f.cols()), (5, 5));
        assert_eq!(f.block(0, 0, 3, 3), sys.a);
        assert_eq!(f.block(0, 3, 3, 2), sys.b2);
        assert_eq!(f.block(3, 0, 2, 5), DenseMatrix::zeros(2, 5));
        // R = diag(1, 0, 0, 1, 1)
        let r = aug.r.to_dense();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j && (i == 0 || i >= 3) { 1.0 } else { 0.0 };
                assert_eq!(r.get(i, j), expect, "R[{i}][{j}]");
            }
        }
    }

    #[test]
    fn augmented_zero_plant() {
        let z3 = DenseMatrix::zeros(3, 3);
        let z32 = DenseMatrix::zeros(3, 2);
        let sys = SystemData::new(
            z3.clone(),
            z32,
            DenseMatrix::identity(3),
            DenseMatrix::identity(3),
            DenseMatrix::zeros(3, 2),
        )
        .unwrap();
        let aug = build_augmented(&sys);
        assert_eq!(aug.f[0].max_abs(), 0.0);
    }

    #[test]
    fn validation_example1_flags_ctc() {
        let rep = validate_assumptions(&example1()).unwrap();
        assert!(rep.check("ct_d_zero").unwrap().passed);
        assert!(rep.check("dt_d_pd").unwrap().passed);
        assert!(!rep.check("ct_c_pd").unwrap().passed, "rank-1 C must be flagged");
        assert!(rep.check("b1_b1t_pd").unwrap().passed);
        assert!(rep.check("stabilizable").unwrap().passed);
        assert!(!rep.all_passed());
    }

    #[test]
    fn validation_trivial_ctd() {
        let sys = SystemData::new(
            DenseMatrix::identity(2).scale(-1.0),
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            DenseMatrix::zeros(2, 2),
        )
        .unwrap();
        let rep = validate_assumptions(&sys).unwrap();
        assert!(rep.check("ct_d_zero").unwrap().passed);
    }

    #[test]
    fn validation_detects_unstabilizable() {
        let sys = SystemData::new(
            DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap(),
            DenseMatrix::zeros(2, 1),
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            DenseMatrix::zeros(2, 1),
        )
        .unwrap();
        let rep = validate_assumptions(&sys).unwrap();
        assert!(!rep.check("stabilizable").unwrap().passed);
    }

    #[test]
    fn constraint_shapes_example1() {
        let prob = build_constraints(&example1(), &example1_partition(), 50.0).unwrap();
        assert_eq!((prob.a_mat.rows(), prob.a_mat.cols()), (8, 25));
        assert_eq!((prob.b_mat.rows(), prob.b_mat.cols()), (8, 6));
        assert_eq!(prob.dims.n_star, 2);
        assert_eq!(prob.dims.rows(), 8);
    }

    #[test]
    fn single_column_block_has_no_pair_rows() {
        let sys = example1();
        let part = BlockPartition::new(vec![1, 1], vec![3]).unwrap();
        let prob = build_constraints(&sys, &part, 1.0).unwrap();
        assert_eq!(prob.dims.n_star, 0);
        assert_eq!(prob.a_mat.rows(), 6);
    }

    #[test]
    fn kron_rows_encode_block_constraints() {
        let prob = build_constraints(&example1(), &example1_partition(), 1.0).unwrap();
        // random symmetric W
        let mut seed = 123_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let w = SymMatrix::from_dense(&DenseMatrix::from_fn(5, 5, |_, _| next()));
        let wt = vec_mat(&w.to_dense());
        let s = prob.apply_a(&wt);
        // first N* = 2 coords are the (1,2) column-block of W1: entries W[0][2], W[1][2]
        assert!((s[0] - w.get(0, 2)).abs() < 1e-12);
        assert!((s[1] - w.get(1, 2)).abs() < 1e-12);
        // last mn coords are vec(W2^T)
        let w2t = DenseMatrix::from_fn(2, 3, |i, j| w.get(3 + i, j));
        for (got, want) in s[2..].iter().zip(vec_mat(&w2t)) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_map_matches_direct_formula() {
        let sys = example1();
        let prob = build_constraints(&sys, &example1_partition(), 1.0).unwrap();
        let mut seed = 77_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let w = SymMatrix::from_dense(&DenseMatrix::from_fn(5, 5, |_, _| next()));
        let wt = vec_mat(&w.to_dense());
        let psi = prob.psi(0, &wt).unwrap();
        // direct: -V2 (F W + W F^T + Q) V2^T with the stored closed-loop F
        let f = &prob.f_cl[0];
        let theta = f
            .matmul(&w.to_dense())
            .add(&w.to_dense().matmul(&f.transpose()))
            .add(&prob.q.to_dense());
        let direct = theta.block(0, 0, 3, 3).scale(-1.0);
        assert!(psi.to_dense().sub(&direct).frob_norm() < 1e-12);
    }

    #[test]
    fn partition_dimension_mismatch_rejected() {
        let bad = BlockPartition::new(vec![1, 1], vec![2, 2]).unwrap();
        assert!(matches!(
            build_constraints(&example1(), &bad, 1.0),
            Err(ProblemError::Dimension(_))
        ));
    }
}
