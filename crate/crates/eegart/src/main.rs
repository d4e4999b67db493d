use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eegart::bench::{corpus_stats, run_benchmark, BenchConfig, BenchmarkReport};
use eegart::dataset::{labeled_rows_for_entry, PipelineConfig};
use eegart::edf::{corpus_scan, ScanConfig};
use eegart::synth::{synth_corpus, SynthParams};
use eegart::Error;

#[derive(Parser)]
#[command(name = "eegart", about = "EEG artifact benchmark toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-class corpus statistics: patients, sessions, annotated seconds
    Stats {
        /// Corpus root directory
        root: PathBuf,
    },
    /// Extract labeled feature windows for every session into a cache
    Extract {
        /// Corpus root directory
        root: PathBuf,
        /// Feature cache directory
        #[arg(long)]
        cache: PathBuf,
    },
    /// Run the full tuning/training/evaluation benchmark
    Bench {
        /// Benchmark configuration file (key = value)
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic corpus
    Synth {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        patients: usize,
        /// Sessions per patient
        #[arg(long, default_value_t = 1)]
        sessions: usize,
        /// Whole seconds per session
        #[arg(long, default_value_t = 120)]
        duration: usize,
        /// Expected artifact events per second
        #[arg(long, default_value_t = 0.08)]
        artifact_rate: f64,
    },
    /// Re-render a saved benchmark report
    Report {
        /// Report JSON produced by `bench`
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "table", value_parser = ["table", "json", "csv"])]
        format: String,
    },
}

fn run(cli: Cli) -> eegart::Result<()> {
    match cli.command {
        Command::Stats { root } => {
            let index = corpus_scan(&root, &ScanConfig::default())?;
            for w in &index.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", corpus_stats(&index)?.render_table());
        }
        Command::Extract { root, cache } => {
            let index = corpus_scan(&root, &ScanConfig::default())?;
            for w in &index.warnings {
                eprintln!("warning: {w}");
            }
            let cfg = PipelineConfig::default();
            let mut total = 0usize;
            for entry in &index.entries {
                let rows = labeled_rows_for_entry(entry, &cfg, Some(&cache))?;
                total += rows.len();
                println!("{}/{}: {} windows", entry.patient_id, entry.session_id, rows.len());
            }
            println!("{} sessions, {total} windows cached under {}", index.entries.len(), cache.display());
        }
        Command::Bench { config } => {
            let cfg = BenchConfig::from_file(&config)?;
            let index = corpus_scan(&cfg.corpus_root, &ScanConfig::default())?;
            let report = run_benchmark(&index, &cfg)?;
            if let Some(dir) = &cfg.output_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("report.json"), report.to_json())?;
                std::fs::write(dir.join("report.txt"), report.render_table())?;
            }
            print!("{}", report.render_table());
        }
        Command::Synth { out, seed, patients, sessions, duration, artifact_rate } => {
            let params = SynthParams {
                patients,
                sessions_per_patient: sessions,
                duration_s: duration,
                artifact_rate,
            };
            let index = synth_corpus(&out, seed, &params)?;
            println!(
                "wrote {} sessions for {} patients under {}",
                index.entries.len(),
                index.patients.len(),
                out.display()
            );
        }
        Command::Report { input, format } => {
            let report = BenchmarkReport::from_json(&std::fs::read_to_string(&input)?)?;
            match format.as_str() {
                "json" => println!("{}", report.to_json()),
                "csv" => print!("{}", report.to_csv()),
                _ => print!("{}", report.render_table()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, everything else is usage
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 1,
                Error::EdfParse(_)
                | Error::Annotation(_)
                | Error::Corpus(_)
                | Error::Montage(_)
                | Error::Dataset(_)
                | Error::Io(_) => 2,
                Error::Feature(_) | Error::Classifier(_) | Error::Tuning(_) | Error::Metrics(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}
