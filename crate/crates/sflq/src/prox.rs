//! Closed-form proximal operators for the block-sparsity penalties.
//!
//! All three penalties act blockwise on `vec(P)` through a [`BlockIndex`];
//! the norm inside a block is the Euclidean (Frobenius) norm of the
//! vectorized block. Each operator returns one deterministic selection even
//! where the underlying prox is set-valued, so regression tests can pin
//! outputs.

use crate::problem::BlockIndex;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ProxError {
    /// Step size or envelope parameter out of range.
    InvalidStep(String),
    /// Operator called with a spec of a different penalty kind.
    KindMismatch { expected: ProxKind, got: ProxKind },
}

impl fmt::Display for ProxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidStep(m) => write!(f, "invalid prox step: {m}"),
            Self::KindMismatch { expected, got } => {
                write!(f, "prox spec kind mismatch: expected {expected:?}, got {got:?}")
            }
        }
    }
}

impl std::error::Error for ProxError {}

/// Which sparsity penalty the outer solvers use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxKind {
    /// `gamma * ||.||_{s,t;0}`: hard blockwise threshold.
    GroupL0,
    /// `gamma * ||.||_{s,t;1}` (sum of block norms): blockwise soft threshold.
    GroupL1,
    /// `gamma * (||.||_{s,t;1} - env_alpha ||.||_{s,t;1})`: firm-threshold type.
    DcEnvelope,
}

/// Penalty description: kind, weight, envelope parameter, and block layout.
#[derive(Debug, Clone)]
pub struct ProxSpec {
    pub kind: ProxKind,
    pub gamma: f64,
    /// Moreau-envelope parameter; only meaningful for [`ProxKind::DcEnvelope`].
    pub alpha: f64,
    pub idx: BlockIndex,
}

impl ProxSpec {
    pub fn group_l0(gamma: f64, idx: BlockIndex) -> Result<Self, ProxError> {
        check_gamma(gamma)?;
        Ok(Self { kind: ProxKind::GroupL0, gamma, alpha: 0.0, idx })
    }

    pub fn group_l1(gamma: f64, idx: BlockIndex) -> Result<Self, ProxError> {
        check_gamma(gamma)?;
        Ok(Self { kind: ProxKind::GroupL1, gamma, alpha: 0.0, idx })
    }

    pub fn dc_envelope(gamma: f64, alpha: f64, idx: BlockIndex) -> Result<Self, ProxError> {
        check_gamma(gamma)?;
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(ProxError::InvalidStep(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self { kind: ProxKind::DcEnvelope, gamma, alpha, idx })
    }

    /// Dispatch to the operator matching `self.kind`.
    pub fn apply(&self, z: &[f64], tau: f64) -> Result<Vec<f64>, ProxError> {
        match self.kind {
            ProxKind::GroupL0 => prox_group_l0(z, tau, self),
            ProxKind::GroupL1 => prox_group_l1(z, tau, self),
            ProxKind::DcEnvelope => prox_dc(z, tau, self),
        }
    }

    /// Penalty value `g(z)` (block zero test is exact for the l0 count).
    pub fn penalty_value(&self, z: &[f64]) -> f64 {
        let mut total = 0.0;
        for set in self.idx.sets() {
            let r = block_norm(z, set);
            total += match self.kind {
                ProxKind::GroupL0 => {
                    if r > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                ProxKind::GroupL1 => r,
                ProxKind::DcEnvelope => {
                    if r <= self.alpha {
                        r - r * r / (2.0 * self.alpha)
                    } else {
                        self.alpha / 2.0
                    }
                }
            };
        }
        self.gamma * total
    }
}

fn check_gamma(gamma: f64) -> Result<(), ProxError> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(ProxError::InvalidStep(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<(), ProxError> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(ProxError::InvalidStep(format!("step size must be > 0, got {tau}")));
    }
    Ok(())
}

fn check_kind(spec: &ProxSpec, expected: ProxKind) -> Result<(), ProxError> {
    if spec.kind != expected {
        return Err(ProxError::KindMismatch { expected, got: spec.kind });
    }
    Ok(())
}

fn block_norm(z: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&k| z[k] * z[k]).sum::<f64>().sqrt()
}

fn scale_block(out: &mut [f64], z: &[f64], set: &[usize], scale: f64) {
    for &k in set {
        out[k] = scale * z[k];
    }
}

/// Blockwise hard threshold: keep block `l` iff `||z_l||^2 > 2 tau gamma`,
/// zero it otherwise (the tie at equality resolves to the zero block).
pub fn prox_group_l0(z: &[f64], tau: f64, spec: &ProxSpec) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    check_kind(spec, ProxKind::GroupL0)?;
    if spec.gamma == 0.0 {
        return Ok(z.to_vec());
    }
    let threshold = 2.0 * tau * spec.gamma;
    let mut out = vec![0.0; z.len()];
    for set in spec.idx.sets() {
        let r2: f64 = set.iter().map(|&k| z[k] * z[k]).sum();
        if r2 > threshold {
            scale_block(&mut out, z, set, 1.0);
        }
    }
    Ok(out)
}

/// Blockwise soft threshold `z_l -> max(0, 1 - tau gamma / ||z_l||) z_l`.
pub fn prox_group_l1(z: &[f64], tau: f64, spec: &ProxSpec) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    check_kind(spec, ProxKind::GroupL1)?;
    if spec.gamma == 0.0 {
        return Ok(z.to_vec());
    }
    let tg = tau * spec.gamma;
    let mut out = vec![0.0; z.len()];
    for set in spec.idx.sets() {
        let r = block_norm(z, set);
        if r > tg {
            scale_block(&mut out, z, set, 1.0 - tg / r);
        }
    }
    Ok(out)
}

/// Prox of `gamma * (||.|| - env_alpha ||.||)` per block: a firm-threshold
/// operator. The block problem reduces to one dimension in the block norm
/// `r`; for `alpha > tau gamma` the minimizer has the closed form
///
/// ```text
/// r(z) = 0                                   if ||z|| <= tau gamma
///      = alpha (||z|| - tau gamma) / (alpha - tau gamma)   if ||z|| < alpha
///      = ||z||                               otherwise,
/// ```
///
/// and in the degenerate regime `alpha <= tau gamma` the minimum is found by
/// exact enumeration of the piecewise-quadratic candidates.
pub fn prox_dc(z: &[f64], tau: f64, spec: &ProxSpec) -> Result<Vec<f64>, ProxError> {
    check_tau(tau)?;
    check_kind(spec, ProxKind::DcEnvelope)?;
    if spec.gamma == 0.0 {
        return Ok(z.to_vec());
    }
    let (gamma, alpha) = (spec.gamma, spec.alpha);
    let tg = tau * gamma;
    let mut out = vec![0.0; z.len()];
    for set in spec.idx.sets() {
        let rz = block_norm(z, set);
        if rz == 0.0 {
            continue;
        }
        let r = if alpha > tg * (1.0 + 1e-9) {
            if rz <= tg {
                0.0
            } else if rz < alpha {
                alpha * (rz - tg) / (alpha - tg)
            } else {
                rz
            }
        } else {
            dc_block_min(rz, tau, gamma, alpha)
        };
        if r > 0.0 {
            scale_block(&mut out, z, set, r / rz);
        }
    }
    Ok(out)
}

/// Exact 1-D minimization of
/// `h(r) = gamma f_alpha(r) + (r - rz)^2 / (2 tau)` over `r >= 0`, where
/// `f_alpha(r) = r - r^2/(2 alpha)` on `[0, alpha]` and `alpha/2` beyond.
/// Candidates: piece endpoints plus interior stationary points.
fn dc_block_min(rz: f64, tau: f64, gamma: f64, alpha: f64) -> f64 {
    let h = |r: f64| -> f64 {
        let pen = if r <= alpha { r - r * r / (2.0 * alpha) } else { alpha / 2.0 };
        gamma * pen + (r - rz) * (r - rz) / (2.0 * tau)
    };
    let mut candidates = vec![0.0, alpha, alpha.max(rz)];
    let quad = 1.0 / tau - gamma / alpha;
    if quad > 0.0 {
        let stat = (rz / tau - gamma) / quad;
        if stat > 0.0 && stat < alpha {
            candidates.push(stat);
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best_r = candidates[0];
    let mut best_v = h(best_r);
    for &r in &candidates[1..] {
        let v = h(r);
        // strict improvement keeps the smaller (sparser) candidate on ties
        if v < best_v - 1e-15 * (1.0 + best_v.abs()) {
            best_v = v;
            best_r = r;
        }
    }
    best_r
}

/// Prox of `phi_2(s) = gamma ||pi(-s_2)||_0 + delta_{s_1 = 0}`: the first
/// `n_star` coordinates project to zero, the rest pass through the blockwise
/// prox of the configured penalty (the sign flip is immaterial because the
/// block penalties are even).
pub fn prox_phi2(
    z: &[f64],
    eta: f64,
    spec: &ProxSpec,
    n_star: usize,
) -> Result<Vec<f64>, ProxError> {
    check_tau(eta)?;
    let tail = spec.apply(&z[n_star..], eta)?;
    let mut out = vec![0.0; z.len()];
    out[n_star..].copy_from_slice(&tail);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_block_index, BlockPartition};

    fn example1_index() -> BlockIndex {
        build_block_index(&BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap())
    }

    fn rng(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        }
    }

    /// Independent oracle: enumerate all support patterns and minimize
    /// `gamma |pattern| + ||y - z||^2 / (2 tau)` exactly.
    fn brute_force_l0(z: &[f64], tau: f64, gamma: f64, idx: &BlockIndex) -> (Vec<f64>, f64) {
        let nb = idx.num_blocks();
        let mut best: Option<(Vec<f64>, f64)> = None;
        for mask in 0..(1usize << nb) {
            let mut y = vec![0.0; z.len()];
            let mut count = 0;
            for (l, set) in idx.sets().iter().enumerate() {
                if mask & (1 << l) != 0 {
                    count += 1;
                    for &k in set {
                        y[k] = z[k];
                    }
                }
            }
            let dist2: f64 = y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            let obj = gamma * count as f64 + dist2 / (2.0 * tau);
            if best.as_ref().map_or(true, |(_, b)| obj < *b) {
                best = Some((y, obj));
            }
        }
        best.unwrap()
    }

    fn l0_objective(y: &[f64], z: &[f64], tau: f64, gamma: f64, idx: &BlockIndex) -> f64 {
        let count = crate::problem::group_l0_count(y, idx, 0.0);
        let dist2: f64 = y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        gamma * count as f64 + dist2 / (2.0 * tau)
    }

    #[test]
    fn l0_zero_fixed_point_and_gamma_zero_identity() {
        let idx = example1_index();
        let spec = ProxSpec::group_l0(5.0, idx.clone()).unwrap();
        assert_eq!(prox_group_l0(&[0.0; 6], 1.0, &spec).unwrap(), vec![0.0; 6]);
        let degenerate = ProxSpec::group_l0(0.0, idx).unwrap();
        let z = [1.0, -2.0, 3.0, 0.5, -0.1, 4.0];
        assert_eq!(prox_group_l0(&z, 0.3, &degenerate).unwrap(), z.to_vec());
    }

    #[test]
    fn l0_rejects_bad_step() {
        let spec = ProxSpec::group_l0(1.0, example1_index()).unwrap();
        assert!(prox_group_l0(&[0.0; 6], 0.0, &spec).is_err());
        assert!(prox_group_l0(&[0.0; 6], -1.0, &spec).is_err());
    }

    #[test]
    fn l0_matches_brute_force_oracle() {
        let idx = example1_index();
        let mut next = rng(0xfeed);
        for &tg in &[0.1, 1.0, 10.0] {
            for trial in 0..200 {
                let z: Vec<f64> = (0..6).map(|_| next() * 3.0).collect();
                let tau = 0.5 + 0.5 * (trial % 3) as f64;
                let gamma = tg / tau;
                let spec = ProxSpec::group_l0(gamma, idx.clone()).unwrap();
                let got = prox_group_l0(&z, tau, &spec).unwrap();
                let (_, best_obj) = brute_force_l0(&z, tau, gamma, &idx);
                let got_obj = l0_objective(&got, &z, tau, gamma, &idx);
                assert!(
                    got_obj - best_obj < 1e-12,
                    "objective gap {} at trial {trial}",
                    got_obj - best_obj
                );
            }
        }
    }

    #[test]
    fn l0_tie_breaks_to_zero_block() {
        // single block of size 1, ||z||^2 == 2 tau gamma exactly
        let idx = build_block_index(&BlockPartition::new(vec![1], vec![1]).unwrap());
        let spec = ProxSpec::group_l0(0.5, idx).unwrap();
        let out = prox_group_l0(&[1.0], 1.0, &spec).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn l0_support_never_grows() {
        let idx = example1_index();
        let spec = ProxSpec::group_l0(0.7, idx.clone()).unwrap();
        let mut next = rng(42);
        for _ in 0..100 {
            let mut z: Vec<f64> = (0..6).map(|_| next()).collect();
            // zero out a random block
            for &k in &idx.sets()[1] {
                z[k] = 0.0;
            }
            let out = prox_group_l0(&z, 0.9, &spec).unwrap();
            let pin = crate::problem::pi_indicator(&z, &idx, 0.0);
            let pout = crate::problem::pi_indicator(&out, &idx, 0.0);
            for (a, b) in pout.iter().zip(&pin) {
                assert!(!a | b, "prox created a nonzero block");
            }
        }
    }

    #[test]
    fn l0_threshold_scaling_law() {
        let idx = example1_index();
        let mut next = rng(7);
        for _ in 0..50 {
            let z: Vec<f64> = (0..6).map(|_| next() * 2.0).collect();
            let (tau, gamma, c) = (0.4, 1.3, 2.5);
            let spec = ProxSpec::group_l0(gamma, idx.clone()).unwrap();
            let scaled: Vec<f64> = z.iter().map(|v| c * v).collect();
            let lhs = prox_group_l0(&scaled, c * c * tau, &spec).unwrap();
            let rhs: Vec<f64> =
                prox_group_l0(&z, tau, &spec).unwrap().iter().map(|v| c * v).collect();
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l1_block_soft_threshold_cases() {
        let idx = build_block_index(&BlockPartition::new(vec![1], vec![2]).unwrap());
        // z = (3,4): ||z|| = 5
        let spec5 = ProxSpec::group_l1(5.0, idx.clone()).unwrap();
        assert_eq!(prox_group_l1(&[3.0, 4.0], 1.0, &spec5).unwrap(), vec![0.0, 0.0]);
        let spec25 = ProxSpec::group_l1(2.5, idx.clone()).unwrap();
        let out = prox_group_l1(&[3.0, 4.0], 1.0, &spec25).unwrap();
        assert!((out[0] - 1.5).abs() < 1e-12 && (out[1] - 2.0).abs() < 1e-12);
        let spec = ProxSpec::group_l1(1.0, idx).unwrap();
        assert_eq!(prox_group_l1(&[0.0, 0.0], 1.0, &spec).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn l1_scalar_optimality_oracle() {
        // the block-norm problem min_r gamma r + (r - rz)^2 / (2 tau) over r >= 0
        let idx = build_block_index(&BlockPartition::new(vec![1], vec![3]).unwrap());
        let mut next = rng(99);
        for _ in 0..200 {
            let z: Vec<f64> = (0..3).map(|_| next() * 4.0).collect();
            let tau = 0.3 + next().abs();
            let gamma = 0.5 + next().abs() * 2.0;
            let spec = ProxSpec::group_l1(gamma, idx.clone()).unwrap();
            let out = prox_group_l1(&z, tau, &spec).unwrap();
            let rz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r_opt = (rz - tau * gamma).max(0.0);
            let r_got = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r_got - r_opt).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_nonexpansive() {
        let idx = example1_index();
        let spec = ProxSpec::group_l1(1.7, idx).unwrap();
        let mut next = rng(1234);
        for _ in 0..200 {
            let z1: Vec<f64> = (0..6).map(|_| next() * 3.0).collect();
            let z2: Vec<f64> = (0..6).map(|_| next() * 3.0).collect();
            let p1 = prox_group_l1(&z1, 0.8, &spec).unwrap();
            let p2 = prox_group_l1(&z2, 0.8, &spec).unwrap();
            let dp: f64 = p1.iter().zip(&p2).map(|(a, b)| (a - b) * (a - b)).sum();
            let dz: f64 = z1.iter().zip(&z2).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(dp <= dz + 1e-12);
        }
    }

    /// Dense 1-D grid + golden-section refinement over the block norm.
    fn dc_oracle_block_norm(rz: f64, tau: f64, gamma: f64, alpha: f64) -> f64 {
        let h = |r: f64| {
            let pen = if r <= alpha { r - r * r / (2.0 * alpha) } else { alpha / 2.0 };
            gamma * pen + (r - rz) * (r - rz) / (2.0 * tau)
        };
        let hi = rz.max(alpha) * 1.5 + 1.0;
        let grid = 20_000;
        let mut best_r = 0.0;
        let mut best_v = h(0.0);
        for i in 0..=grid {
            let r = hi * i as f64 / grid as f64;
            let v = h(r);
            if v < best_v {
                best_v = v;
                best_r = r;
            }
        }
        // local golden-section refinement around the grid minimum
        let (mut a, mut b) = ((best_r - hi / grid as f64).max(0.0), best_r + hi / grid as f64);
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if h(x1) < h(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn dc_trivial_cases() {
        let idx = example1_index();
        let spec = ProxSpec::dc_envelope(10.0, 1.0, idx).unwrap();
        assert_eq!(prox_dc(&[0.0; 6], 0.2, &spec).unwrap(), vec![0.0; 6]);
        // large block far above gamma (tau + alpha): unchanged
        let z = [100.0, -120.0, 0.0, 0.0, 0.0, 0.0];
        let out = prox_dc(&z, 0.2, &spec).unwrap();
        for (a, b) in out.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dc_matches_numeric_oracle() {
        let idx = build_block_index(&BlockPartition::new(vec![1], vec![3]).unwrap());
        let mut next = rng(0xabcd);
        for &tau in &[0.05, 0.2, 1.0] {
            let spec = ProxSpec::dc_envelope(10.0, 1.0, idx.clone()).unwrap();
            for _ in 0..170 {
                let z: Vec<f64> = (0..3).map(|_| next() * 5.0).collect();
                let out = prox_dc(&z, tau, &spec).unwrap();
                let rz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r_got = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r_ref = dc_oracle_block_norm(rz, tau, 10.0, 1.0);
                let h = |r: f64| {
                    let pen = if r <= 1.0 { r - r * r / 2.0 } else { 0.5 };
                    10.0 * pen + (r - rz) * (r - rz) / (2.0 * tau)
                };
                assert!(
                    h(r_got) - h(r_ref) < 1e-8,
                    "objective gap {} (rz = {rz}, tau = {tau})",
                    h(r_got) - h(r_ref)
                );
            }
        }
    }

    #[test]
    fn dc_degenerate_regime_uses_enumeration() {
        // alpha <= tau gamma: hard-threshold-like behavior, still optimal
        let idx = build_block_index(&BlockPartition::new(vec![1], vec![2]).unwrap());
        let spec = ProxSpec::dc_envelope(4.0, 0.5, idx).unwrap();
        let tau = 1.0; // tau gamma = 4 > alpha
        for &rz in &[0.1, 0.4, 0.9, 1.5, 2.5, 5.0] {
            let z = [rz, 0.0];
            let out = prox_dc(&z, tau, &spec).unwrap();
            let r_got = (out[0] * out[0] + out[1] * out[1]).sqrt();
            let r_ref = dc_oracle_block_norm(rz, tau, 4.0, 0.5);
            let h = |r: f64| {
                let pen = if r <= 0.5 { r - r * r } else { 0.25 };
                4.0 * pen + (r - rz) * (r - rz) / (2.0 * tau)
            };
            assert!(h(r_got) <= h(r_ref) + 1e-8, "rz = {rz}");
        }
    }

    #[test]
    fn dc_shrinks_less_than_l1_for_large_blocks() {
        let idx = example1_index();
        let (gamma, alpha, tau) = (2.0, 1.0, 0.4);
        let dc = ProxSpec::dc_envelope(gamma, alpha, idx.clone()).unwrap();
        let l1 = ProxSpec::group_l1(gamma, idx.clone()).unwrap();
        let mut next = rng(555);
        for _ in 0..100 {
            let z: Vec<f64> = (0..6)
                .map(|_| (gamma * (tau + alpha) + 1.0 + next().abs() * 3.0) * next().signum())
                .collect();
            let out_dc = prox_dc(&z, tau, &dc).unwrap();
            let out_l1 = prox_group_l1(&z, tau, &l1).unwrap();
            for set in idx.sets() {
                let r_dc = block_norm(&out_dc, set);
                let r_l1 = block_norm(&out_l1, set);
                assert!(r_dc >= r_l1 - 1e-12);
            }
        }
    }

    #[test]
    fn phi2_zeroes_head_and_reduces_to_l0() {
        let idx = example1_index();
        let spec = ProxSpec::group_l0(1.2, idx.clone()).unwrap();
        let mut next = rng(31337);
        for _ in 0..100 {
            let z: Vec<f64> = (0..8).map(|_| next() * 4.0).collect();
            let out = prox_phi2(&z, 0.7, &spec, 2).unwrap();
            assert_eq!(&out[..2], &[0.0, 0.0]);
            let tail_ref = prox_group_l0(&z[2..], 0.7, &spec).unwrap();
            let (_, best_obj) = brute_force_l0(&z[2..], 0.7, 1.2, &idx);
            let got_obj = l0_objective(&out[2..], &z[2..], 0.7, 1.2, &idx);
            assert!(got_obj - best_obj < 1e-12);
            assert_eq!(&out[2..], &tail_ref[..]);
        }
        assert_eq!(prox_phi2(&[0.0; 8], 1.0, &spec, 2).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn stochastic_minimality_all_kinds() {
        let idx = example1_index();
        let specs = vec![
            ProxSpec::group_l0(1.5, idx.clone()).unwrap(),
            ProxSpec::group_l1(1.5, idx.clone()).unwrap(),
            ProxSpec::dc_envelope(1.5, 0.8, idx.clone()).unwrap(),
        ];
        let mut next = rng(2024);
        let tau = 0.6;
        for spec in &specs {
            let z: Vec<f64> = (0..6).map(|_| next() * 2.0).collect();
            let out = spec.apply(&z, tau).unwrap();
            let obj = |y: &[f64]| {
                let dist2: f64 = y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                spec.penalty_value(y) + dist2 / (2.0 * tau)
            };
            let out_obj = obj(&out);
            for _ in 0..1000 {
                let cand: Vec<f64> = (0..6).map(|_| next() * 3.0).collect();
                assert!(out_obj <= obj(&cand) + 1e-10, "prox output not minimal ({:?})", spec.kind);
            }
        }
    }
}
