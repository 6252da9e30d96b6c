//! Bundled example plants and configuration presets.
//!
//! The two benchmark systems (a 3-state chain with two inputs and a dense
//! 5-state plant) are embedded verbatim together with parameter presets for
//! the experiments the acceptance suite reproduces.

use sflq::linalg::DenseMatrix;
use sflq::problem::{BlockPartition, SystemData};

pub const EXAMPLE1_ADMM_CFG: &str = include_str!("../configs/example1_admm.cfg");
pub const EXAMPLE1_ADMM_B30_CFG: &str = include_str!("../configs/example1_admm_beta30.cfg");
pub const EXAMPLE1_ADMM_B300_CFG: &str = include_str!("../configs/example1_admm_beta300.cfg");
pub const EXAMPLE1_ADMM_OSC_CFG: &str = include_str!("../configs/example1_admm_osc.cfg");
pub const EXAMPLE1_DR_CFG: &str = include_str!("../configs/example1_dr.cfg");
pub const EXAMPLE1_L1_CFG: &str = include_str!("../configs/example1_l1.cfg");
pub const EXAMPLE1_DC_CFG: &str = include_str!("../configs/example1_dc.cfg");
pub const EXAMPLE1_PALM_CFG: &str = include_str!("../configs/example1_palm.cfg");
pub const EXAMPLE1_SUBGRAD_CFG: &str = include_str!("../configs/example1_subgrad.cfg");
pub const EXAMPLE2_ADMM_CFG: &str = include_str!("../configs/example2_admm.cfg");

/// `(name, contents)` pairs of every bundled configuration.
pub fn bundled_configs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("example1_admm.cfg", EXAMPLE1_ADMM_CFG),
        ("example1_admm_beta30.cfg", EXAMPLE1_ADMM_B30_CFG),
        ("example1_admm_beta300.cfg", EXAMPLE1_ADMM_B300_CFG),
        ("example1_admm_osc.cfg", EXAMPLE1_ADMM_OSC_CFG),
        ("example1_dr.cfg", EXAMPLE1_DR_CFG),
        ("example1_l1.cfg", EXAMPLE1_L1_CFG),
        ("example1_dc.cfg", EXAMPLE1_DC_CFG),
        ("example1_palm.cfg", EXAMPLE1_PALM_CFG),
        ("example1_subgrad.cfg", EXAMPLE1_SUBGRAD_CFG),
        ("example2_admm.cfg", EXAMPLE2_ADMM_CFG),
    ]
}

/// Look up a bundled config by file name.
pub fn bundled(name: &str) -> Option<&'static str> {
    bundled_configs().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
}

/// The 3-state integrator-chain benchmark plant.
pub fn example1_system() -> SystemData {
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
    let c = DenseMatrix::from_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0],
    ])
    .unwrap();
    let d = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    SystemData::new(a, b2, DenseMatrix::identity(3), c, d).unwrap()
}

pub fn example1_partition() -> BlockPartition {
    BlockPartition::new(vec![1, 1], vec![2, 1]).unwrap()
}

/// The dense 5-state benchmark plant.
pub fn example2_system() -> SystemData {
    let a = DenseMatrix::from_rows(&[
        vec![0.3079, 0.1879, 0.1797, 0.2935, 0.6537],
        vec![0.5194, 0.2695, 0.5388, 0.9624, 0.5366],
        vec![0.7683, 0.4962, 0.2828, 0.9132, 0.9957],
        vec![0.7892, 0.7391, 0.7609, 0.5682, 0.1420],
        vec![0.8706, 0.1950, 0.2697, 0.4855, 0.9753],
    ])
    .unwrap();
    let b2 = DenseMatrix::from_rows(&[
        vec![0.6196, 0.6414],
        vec![0.7205, 0.9233],
        vec![0.2951, 0.8887],
        vec![0.6001, 0.6447],
        vec![0.7506, 0.2956],
    ])
    .unwrap();
    let mut c = DenseMatrix::zeros(5, 5);
    c.set(0, 0, 1.0);
    c.set(1, 1, 1.0);
    let mut d = DenseMatrix::zeros(5, 2);
    d.set(2, 0, 1.0);
    d.set(3, 1, 1.0);
    SystemData::new(a, b2, DenseMatrix::identity(5), c, d).unwrap()
}

pub fn example2_partition() -> BlockPartition {
    BlockPartition::new(vec![1, 1], vec![2, 2, 1]).unwrap()
}
