use curator_core::fim::{build_sample, FimConfig, FimMode};
use curator_core::Document;

fn band(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn clm_and_psm_fractions_within_three_sigma_at_100k() {
    let cfg = FimConfig::default();
    let n = 100_000;
    let (mut clm, mut psm) = (0usize, 0usize);
    for i in 0..n {
        let doc = Document::new(format!("doc-{i}"), "x.py", "fn main() { println!(\"hi\"); }");
        match build_sample(&doc, &cfg, 2024).sample.mode {
            FimMode::Clm => clm += 1,
            FimMode::Psm => psm += 1,
            FimMode::Spm => {}
        }
    }
    let clm_frac = clm as f64 / n as f64;
    assert!((clm_frac - cfg.alpha).abs() <= band(cfg.alpha, n), "CLM fraction {clm_frac}");
    assert!((0.494..=0.506).contains(&clm_frac));
    let fim = n - clm;
    let psm_frac = psm as f64 / fim as f64;
    assert!((psm_frac - cfg.psm_fraction).abs() <= band(cfg.psm_fraction, fim), "PSM fraction {psm_frac}");
}
