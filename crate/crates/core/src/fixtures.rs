//! Small built-in models used by the test suite, the verification battery and
//! the bundled example configs.  Scores are multiples of 0.1 on the discrete
//! fixtures so that a 0.1-step value grid represents every reachable point
//! exactly.

use std::sync::Arc;

use crate::model::{Atom, ObservationModel, TableFamily};

/// Symmetric two-point score, q in {-1, +1} with equal mass.
pub fn two_point() -> ObservationModel {
    ObservationModel::iid(two_point_stage())
}

pub(crate) fn two_point_stage() -> Arc<TableFamily> {
    Arc::new(
        TableFamily::new(
            0.0,
            vec![
                Atom { x: -1.0, p: 0.5, q: -1.0 },
                Atom { x: 1.0, p: 0.5, q: 1.0 },
            ],
        )
        .unwrap(),
    )
}

/// Asymmetric two-point score, q in {-0.5, +2.0}.
pub fn two_point_skewed() -> ObservationModel {
    ObservationModel::iid(two_point_skewed_stage())
}

pub(crate) fn two_point_skewed_stage() -> Arc<TableFamily> {
    Arc::new(
        TableFamily::new(
            0.0,
            vec![
                Atom { x: 0.0, p: 0.8, q: -0.5 },
                Atom { x: 1.0, p: 0.2, q: 2.0 },
            ],
        )
        .unwrap(),
    )
}

/// Three-point score, q in {-1.5, +0.6, 0}.
pub fn three_point() -> ObservationModel {
    ObservationModel::iid(three_point_stage())
}

pub(crate) fn three_point_stage() -> Arc<TableFamily> {
    Arc::new(
        TableFamily::new(
            0.0,
            vec![
                Atom { x: -1.0, p: 0.2, q: -1.5 },
                Atom { x: 0.0, p: 0.5, q: 0.6 },
                Atom { x: 1.0, p: 0.3, q: 0.0 },
            ],
        )
        .unwrap(),
    )
}

/// Bernoulli(theta) at theta0 = 0.5; scores are -2 and +2.
pub fn bernoulli_iid() -> ObservationModel {
    ObservationModel::iid(Arc::new(
        crate::model::BernoulliFamily::new(0.5).unwrap(),
    ))
}

/// Normal mean family N(theta, 1) at theta0 = 0.
pub fn normal_iid() -> ObservationModel {
    ObservationModel::iid(Arc::new(crate::model::NormalMeanFamily::new(0.0, 64)))
}

/// Theta-constant stage: every score is zero.
pub fn degenerate() -> ObservationModel {
    ObservationModel::iid(Arc::new(
        TableFamily::degenerate(0.0, vec![(0.0, 1.0)]).unwrap(),
    ))
}

/// Period-2 model alternating the symmetric and skewed two-point stages.
pub fn periodic_two_stage() -> ObservationModel {
    ObservationModel::periodic(vec![two_point_stage(), two_point_skewed_stage()]).unwrap()
}

/// Finitely non-stationary model with change index 3: two distinct early
/// stages, then the symmetric two-point stage forever.
pub fn fns_three_stage() -> ObservationModel {
    ObservationModel::finitely_nonstationary(vec![
        two_point_skewed_stage(),
        three_point_stage(),
        two_point_stage(),
    ])
    .unwrap()
}
