use fairsurr::balanced::BalancedConfig;
use fairsurr::dataset::{self, DatasetSchema, ResampleMode, SplitSpec};
use fairsurr::metrics;
use fairsurr::report::{self, candidates, select_on_validation, Candidate};
use fairsurr::surrogates::Surrogate;
use fairsurr::synth::SynthDataset;
use fairsurr::trainer::{self, PenaltyMode, TrainConfig};

fn main() {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let only: Option<String> = std::env::args().nth(2);
    let rhos_wide = [0.5, 2.0, 5.0, 10.0, 20.0];
    let rhos_compas = [2.0, 5.0, 10.0, 20.0];
    let gs_pairs_wide = [
        (1.0, 5.0),
        (1.0, 10.0),
        (2.0, 5.0),
        (2.0, 10.0),
        (4.0, 10.0),
        (4.0, 20.0),
    ];
    let gs_pairs_compas = [
        (1.0, 2.0),
        (1.0, 5.0),
        (2.0, 2.0),
        (2.0, 5.0),
        (4.0, 2.0),
        (4.0, 5.0),
    ];
    let dir = tempfile::tempdir().unwrap();
    for d in [
        SynthDataset::AdultLike,
        SynthDataset::BankLike,
        SynthDataset::CompasLike,
    ] {
        if let Some(f) = &only {
            if !d.to_string().starts_with(f.as_str()) {
                continue;
            }
        }
        let rows = match d {
            SynthDataset::CompasLike => d.default_rows(),
            _ => 24_000,
        };
        let mut sums = [0.0f64; 4];
        for seed in 0..seeds {
            let t0 = std::time::Instant::now();
            let files = d.write(rows, seed, dir.path()).unwrap();
            let schema = DatasetSchema::from_json_file(&files.schema).unwrap();
            let spec = SplitSpec::new(0.70, 0.05, 0.25, seed).unwrap();
            let s = dataset::load_split_encode(&files.csv, &schema, &spec).unwrap();
            let rhos: &[f64] = if d == SynthDataset::CompasLike {
                &rhos_compas
            } else {
                &rhos_wide
            };
            let tcfg = TrainConfig {
                penalty_mode: PenaltyMode::Squared,
                ..TrainConfig::default()
            };

            let un = trainer::train(&s.train, Surrogate::Linear, &tcfg).unwrap();
            let m = metrics::normalized_margins(&un.model, &s.test).unwrap();
            let stats = metrics::large_margin_stats(&m).unwrap();
            println!(
                "{d} seed {seed}: unc acc={:.4} ddp={:+.4} outlier={:.4}",
                metrics::accuracy(&m).unwrap(),
                metrics::ddp_hat_from(&m).unwrap(),
                stats.outlier_rate(),
            );

            let lin = select_on_validation(
                &s.train,
                &s.validation,
                &candidates(Surrogate::Linear, rhos),
                &tcfg,
                None,
            )
            .unwrap();
            let lr =
                report::evaluate(&lin.model, &s.test, lin.candidate.surrogate, "test", 0, &tcfg)
                    .unwrap();
            println!(
                "  lin  rho={:<4} test ddp={:.4} acc={:.4}",
                lin.candidate.rho, lr.ddp_hat_abs, lr.accuracy
            );

            let bal = BalancedConfig {
                tau: 12,
                ..BalancedConfig::default()
            };
            let blin = select_on_validation(
                &s.train,
                &s.validation,
                &candidates(Surrogate::Linear, rhos),
                &tcfg,
                Some(&bal),
            )
            .unwrap();
            let br = report::evaluate(
                &blin.model,
                &s.test,
                blin.candidate.surrogate,
                "test",
                0,
                &tcfg,
            )
            .unwrap();
            println!(
                "  blin rho={:<4} test ddp={:.4} acc={:.4} lam={:.3} iters={}",
                blin.candidate.rho,
                br.ddp_hat_abs,
                br.accuracy,
                blin.lambda_trace.last().copied().unwrap_or(1.0),
                blin.lambda_trace.len(),
            );

            let gs_pairs: &[(f64, f64)] = if d == SynthDataset::CompasLike {
                &gs_pairs_compas
            } else {
                &gs_pairs_wide
            };
            let gs_c: Vec<Candidate> = gs_pairs
                .iter()
                .map(|&(w, rho)| Candidate {
                    surrogate: Surrogate::general_sigmoid(w).unwrap(),
                    rho,
                })
                .collect();
            if std::env::var("CAL_CELLS").is_ok() {
                for c in &gs_c {
                    let cfg = TrainConfig { rho: c.rho, ..tcfg };
                    let r = trainer::train(&s.train, c.surrogate, &cfg).unwrap();
                    let v = report::evaluate(&r.model, &s.validation, c.surrogate, "val", 0, &cfg)
                        .unwrap();
                    let t =
                        report::evaluate(&r.model, &s.test, c.surrogate, "test", 0, &cfg).unwrap();
                    println!(
                        "    cell {} rho={:<4} val ddp={:.4} test ddp={:.4} acc={:.4}",
                        c.surrogate, c.rho, v.ddp_hat_abs, t.ddp_hat_abs, t.accuracy
                    );
                }
            }
            let gs = select_on_validation(&s.train, &s.validation, &gs_c, &tcfg, None).unwrap();
            let gr = report::evaluate(&gs.model, &s.test, gs.candidate.surrogate, "test", 0, &tcfg)
                .unwrap();
            println!(
                "  gs   {} rho={:<4} test ddp={:.4} acc={:.4}",
                gs.candidate.surrogate, gs.candidate.rho, gr.ddp_hat_abs, gr.accuracy
            );
            sums[0] += lr.ddp_hat_abs;
            sums[1] += br.ddp_hat_abs;
            sums[2] += gr.ddp_hat_abs;
            sums[3] += gr.accuracy;

            if d == SynthDataset::AdultLike {
                for mode in [
                    ResampleMode::DownsampleMajority,
                    ResampleMode::UpsampleMinorityFull,
                ] {
                    let res = dataset::resample_balanced(&s.train, mode, seed).unwrap();
                    print!("  resample {mode:?} linear test ddp:");
                    for rho in [0.5, 2.0, 5.0] {
                        let cfg = TrainConfig { rho, ..tcfg };
                        let r = trainer::train(&res, Surrogate::Linear, &cfg).unwrap();
                        let t = report::evaluate(&r.model, &s.test, Surrogate::Linear, "test", 0, &cfg)
                            .unwrap();
                        print!(" {rho}:{:.4}", t.ddp_hat_abs);
                    }
                    println!();
                }
            }
            println!("  ({:.1?})", t0.elapsed());
        }
        let n = seeds as f64;
        println!(
            "== {d} means over {seeds} seeds: lin={:.4} blin={:.4} gs={:.4} gs_acc={:.4}",
            sums[0] / n,
            sums[1] / n,
            sums[2] / n,
            sums[3] / n
        );
    }
}
