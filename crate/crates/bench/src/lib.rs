//! Shared fixtures for the pipeline benchmarks.

use armwise::{Cohort, EffectModel, ScenarioSpec};

/// A threshold-heterogeneous trial of the given size, the shape the
/// benchmarks exercise end to end.
pub fn benchmark_cohort(n_patients: usize, seed: u64) -> Cohort {
    let spec = ScenarioSpec {
        n_patients,
        n_features: 8,
        effect: EffectModel::ThresholdHeterogeneous {
            boundary_feature: 1,
            tau_low: -1.0,
            tau_high: 1.0,
            boundary_value: None,
        },
        noise_sd: 0.5,
        missing_rate: 0.05,
        pec_shift: 15.0,
        pec_scale: 0.5,
        seed,
    };
    armwise::synthetic::generate(&spec)
        .expect("benchmark scenario is valid")
        .cohort
}
