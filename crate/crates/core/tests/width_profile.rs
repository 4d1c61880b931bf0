use causal_bounds::coverage::{run_coverage, CoverageConfig};
use causal_bounds::effects::{Criterion, EffectQuery, Regime};
use causal_bounds::simulator::fixtures;

fn mean_halfwidth(criterion: Criterion, regime: Regime, n: u64) -> f64 {
    let model = match criterion {
        Criterion::Backdoor => fixtures::confounded_binary(),
        Criterion::Frontdoor => fixtures::frontdoor_chain(),
    };
    let report = run_coverage(
        &model,
        &CoverageConfig {
            query: EffectQuery::new(criterion, 1, 1, 0.1, regime),
            policy: None,
            n,
            replications: 40,
            base_seed: 7,
        },
    )
    .unwrap();
    report.mean_final_halfwidth.expect("finite at these sizes")
}

#[test]
fn mean_halfwidth_shrinks_with_n() {
    for criterion in [Criterion::Backdoor, Criterion::Frontdoor] {
        for regime in [Regime::Iid, Regime::AdaptiveFixed, Regime::Anytime] {
            let widths: Vec<f64> = [1 << 7, 1 << 9, 1 << 11]
                .into_iter()
                .map(|n| mean_halfwidth(criterion, regime, n))
                .collect();
            assert!(widths.windows(2).all(|w| w[1] < w[0]), "{criterion} {regime}: {widths:?}");
        }
    }
}
