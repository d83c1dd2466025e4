use dpnote_core::pipeline::{run_pipeline, PipelineConfig};

fn base_config(out: &str) -> PipelineConfig {
    let mut config = PipelineConfig::default();
    let base = std::path::Path::new("crates/core/tests/fixtures");
    config.paths.public = base.join("toy_public.jsonl");
    config.paths.private_train = base.join("toy_train.jsonl");
    config.paths.private_test = base.join("toy_test.jsonl");
    config.paths.lexicon = base.join("toy_lexicon.txt");
    config.paths.output_dir = out.into();
    config.generation.max_tokens = 96;
    config
}

fn main() {
    for eps in [2.0, f64::INFINITY] {
        let mut means = Vec::new();
        for seed in 0..5u64 {
            let mut config = base_config("/tmp/probe_out");
            config.budgets.epsilon_n = eps;
            config.budgets.epsilon_t = None;
            config.run.seed = 1000 + seed;
            let (_, report) = run_pipeline(&config).unwrap();
            means.push(report.evaluation.privacy_probe.as_ref().unwrap().mean);
        }
        let avg: f64 = means.iter().sum::<f64>() / means.len() as f64;
        println!("eps_n={eps}: per-seed means {means:?} -> avg {avg:.4}");
    }
}
