use std::f64::consts::PI;

use nvk_core::conditions::{classify_with_evidence, CaseLabel};
use nvk_core::measures::Measure;
use nvk_core::QuadratureConfig;

fn pi_delta0() -> Measure {
    Measure::dirac(vec![0.0], PI).unwrap()
}

fn fixtures() -> Vec<(Option<CaseLabel>, [f64; 4], Measure)> {
    use CaseLabel::*;
    vec![
        (Some(I1), [0.0, 0.0, 1.0, 1.0], pi_delta0()),
        (Some(I2), [1.0, 0.0, 0.0, 1.0], Measure::lebesgue(1)),
        (Some(Ii1), [1.0, 1.0, 0.0, 0.0], pi_delta0()),
        (Some(Ii2), [0.0, 1.0, 1.0, 0.0], Measure::lebesgue(1)),
        (Some(Iii1a), [1.0, 1.0, -1.0, -1.0], pi_delta0()),
        (Some(Iii1b), [1.0, 1.0, 1.0, -1.0], Measure::lebesgue(1)),
        (Some(Iii2a), [1.0, 1.0, 1.0, 1.0], Measure::zero(1)),
        (Some(Iii2b), [1.0, 1.0, 1.0, 2.0], Measure::lebesgue(1)),
        (None, [1.0, 1.0, 1.0, 1.0], pi_delta0()),
        (None, [1.0, 0.0, 1.0, 0.0], pi_delta0()),
        (None, [1.0, 1.0, 1.0, 2.0], pi_delta0()),
    ]
}

#[test]
fn fixtures_classify_and_evidence_agrees() {
    let cfg = QuadratureConfig::default();
    for (expected, coef, mu) in fixtures() {
        let start = std::time::Instant::now();
        let report = classify_with_evidence(coef, &mu, None, &cfg).unwrap();
        let label = report.classification.label;
        match expected {
            Some(e) => assert_eq!(label, e, "{coef:?}"),
            None => assert_eq!(label, CaseLabel::NotRepresenting, "{coef:?}"),
        }
        assert_eq!(
            report.evidence.supports_representing(),
            expected.is_some(),
            "{coef:?} {:?}",
            report.evidence
        );
        eprintln!("{coef:?} {label} {:?} {:?}", start.elapsed(), report.evidence);
    }
}
