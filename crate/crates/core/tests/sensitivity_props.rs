mod common;

use common::{ishigami, ishigami_totals};
use krigesense::kernel::ReducedParams;
use krigesense::sensitivity::{
    lhs_sample, response_weights, run_study, sobol_total, Omega2Mode, ParamBox, ParamRange, Response, StudyConfig,
    StudyGrid, NU, RHO, SIGMA2,
};
use proptest::prelude::*;

fn unit_box(p: usize) -> ParamBox {
    ParamBox::new(
        (0..p)
            .map(|j| ParamRange {
                name: format!("u{j}"),
                min: -1.0 - j as f64,
                max: 2.0 + j as f64,
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lhs_has_one_point_per_stratum(count in 4usize..200, p in 1usize..5, seed in any::<u64>()) {
        prop_assume!(count >= p);
        let b = unit_box(p);
        let x = lhs_sample(count, &b, seed).unwrap();
        prop_assert_eq!((x.rows(), x.cols()), (count, p));
        for (j, r) in b.active().iter().enumerate() {
            let mut strata: Vec<usize> = x
                .column(j)
                .iter()
                .map(|v| (((v - r.min) / (r.max - r.min)) * count as f64).floor() as usize)
                .collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..count).collect::<Vec<_>>());
        }
    }
}

#[test]
fn ishigami_calibration() {
    let b = ParamBox::new(
        (0..3)
            .map(|j| ParamRange {
                name: format!("x{}", j + 1),
                min: -std::f64::consts::PI,
                max: std::f64::consts::PI,
            })
            .collect(),
    )
    .unwrap();
    let r = sobol_total(|x| Ok(ishigami(x, 7.0, 0.1)), &b, None, 4096, 17).unwrap();
    let want = ishigami_totals(7.0, 0.1);
    for (e, w) in r.inputs.iter().zip(want) {
        assert!((e.total_index - w).abs() < 0.05, "{}: {} vs {w}", e.name, e.total_index);
    }
    assert_eq!(r.evaluations, 4096 * 5);
}

#[test]
fn ignored_input_has_zero_total_effect() {
    // weights do not depend on σ²; give it a slot anyway
    let grid = StudyGrid::new(1).unwrap();
    let b = ParamBox::matern_default().fix("omega2", 0.01).unwrap();
    let r = sobol_total(
        |x| {
            let theta = ReducedParams::new(x[1], x[2], 0.01)?;
            response_weights(&grid, &theta, x[3] as usize)
        },
        &b,
        Some(grid.len()),
        512,
        5,
    )
    .unwrap();
    let s = r.get(SIGMA2).unwrap();
    assert_eq!(s.total_index, 0.0);
    assert!(s.total_index.abs() <= s.bootstrap_halfwidth.max(1e-12));
}

#[test]
fn studies_are_deterministic() {
    let c = StudyConfig::new(2, Response::PredictionVariance, Omega2Mode::Varying, 256, 99);
    assert_eq!(run_study(&c).unwrap(), run_study(&c).unwrap());
    let mut d = c.clone();
    d.seed = 100;
    assert_ne!(run_study(&c).unwrap(), run_study(&d).unwrap());
}

#[test]
fn shares_stable_when_doubling_the_sample() {
    let small = run_study(&StudyConfig::new(1, Response::Weights, Omega2Mode::Varying, 1024, 3)).unwrap();
    let large = run_study(&StudyConfig::new(1, Response::Weights, Omega2Mode::Varying, 2048, 3)).unwrap();
    for (a, b) in small.inputs.iter().zip(&large.inputs) {
        assert!(
            (a.percent_share - b.percent_share).abs() <= 1.0,
            "{}: {:.2} vs {:.2}",
            a.name,
            a.percent_share,
            b.percent_share
        );
    }
}

#[test]
fn range_matters_more_with_a_nugget() {
    let share = |w| {
        run_study(&StudyConfig::new(1, Response::Weights, Omega2Mode::Fixed(w), 1024, 8))
            .unwrap()
            .share(RHO)
            .unwrap()
    };
    assert!(share(0.1) > share(0.0));
}

#[test]
fn variance_study_inputs() {
    let r = run_study(&StudyConfig::new(1, Response::PredictionVariance, Omega2Mode::Varying, 256, 1)).unwrap();
    let names: Vec<&str> = r.inputs.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, vec![SIGMA2, RHO, NU, "omega2"]);
    assert_eq!(r.evaluations, 256 * 6);
}
