//! Seeded synthetic QA runs for benchmarking.
//!
//! Each unit gets a latent defect proneness that drives inspection, test and
//! historical defect counts alike, while size and complexity are drawn
//! independently of it. Test effort grows with size. On such data, rules
//! over inspection results should outrank rules over size or complexity;
//! that is a property of this generator, not a general law.

use infocus_core::{CodeUnit, ContextProfile, DefectRecord, Phase, ProjectData, TestEffortRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub units: usize,
    pub seed: u64,
    /// Share of units with high defect proneness.
    pub hot_share: f64,
    pub hot_rate: f64,
    pub cold_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            units: 50,
            seed: 2009,
            hot_share: 0.2,
            hot_rate: 3.0,
            cold_rate: 0.3,
        }
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn tenths(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn synthetic_project(params: &SynthParams) -> ProjectData {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let width = params.units.to_string().len().max(2);
    let mut p = ProjectData {
        run_id: format!("synthetic-{}-{}", params.units, params.seed),
        context: ContextProfile::new()
            .with("project", "synthetic")
            .with("phase", "system-test")
            .with("seed", params.seed.to_string()),
        test_defects: Some(Vec::new()),
        test_effort: Some(Vec::new()),
        ..Default::default()
    };
    for i in 0..params.units {
        let id = format!("u{:0width$}", i + 1);
        let size: u64 = rng.gen_range(80..=900);
        let complexity: u32 = rng.gen_range(1..=60);
        let hot = rng.gen_bool(params.hot_share);
        let rate = if hot {
            params.hot_rate
        } else {
            params.cold_rate
        };
        let reading_rate: f64 = rng.gen_range(150.0..450.0);
        let effort_per_loc: f64 = rng.gen_range(0.08..0.15);

        let mut unit = CodeUnit::new(id.clone(), size)
            .with_complexity(complexity as f64)
            .inspected(tenths(size as f64 / reading_rate * 60.0));
        unit.name = format!("Class{}", i + 1);
        p.units.push(unit);

        for n in 0..poisson(&mut rng, 1.5 * rate) {
            p.inspection_defects.push(DefectRecord::new(
                format!("{id}-i{n}"),
                &id,
                Phase::Inspection,
            ));
        }
        for n in 0..poisson(&mut rng, 1.2 * rate) {
            p.test_defects.as_mut().unwrap().push(DefectRecord::new(
                format!("{id}-t{n}"),
                &id,
                Phase::Test,
            ));
        }
        for n in 0..poisson(&mut rng, 0.5 * rate) {
            p.historical_defects.push(DefectRecord::new(
                format!("{id}-h{n}"),
                &id,
                Phase::Historical,
            ));
        }
        p.test_effort.as_mut().unwrap().push(TestEffortRecord {
            unit_id: id,
            effort_minutes: tenths(size as f64 * effort_per_loc).max(0.1),
        });
    }
    p
}
