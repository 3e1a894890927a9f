use std::process::ExitCode;

use clap::Parser;
use vqebo::harness::{rerun_from_manifest, run_experiment, ExperimentOutcome, Manifest};
use vqebo_cli::{Cli, Command};

fn report(outcome: &ExperimentOutcome) {
    for (method, agg) in &outcome.summaries {
        let last = agg.energy.len() - 1;
        let fid = agg.fidelity.get(last).map_or("n/a".to_string(), |q| format!("{:.4}", q.median));
        println!(
            "{method:>9}  n_obs={:<5} energy median {:.5} [{:.5}, {:.5}]  fidelity median {fid}",
            agg.n_obs[last], agg.energy[last].median, agg.energy[last].p25, agg.energy[last].p75
        );
    }
    println!("wrote {} and {}", outcome.csv_path.display(), outcome.manifest_path.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => args.to_config().and_then(|cfg| run_experiment(&cfg)),
        Command::Rerun { manifest, out_dir } => Manifest::load(manifest).and_then(|m| rerun_from_manifest(&m, out_dir.clone())),
    };
    match result {
        Ok(outcome) => {
            report(&outcome);
            if outcome.any_aborted() {
                log::error!("some cells aborted; see the manifest");
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
