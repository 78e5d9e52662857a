use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use visim::harness::{
    run_bench, run_hitrate, score, write_bench_csv, write_hitrate_csv, Algorithm, BenchConfig, HitRateConfig,
};
use visim::io::{
    assign_to_vocabulary, generate_synthetic, kmeans_quantize, load_features, load_images, load_psmi,
    load_vocabulary, save_images, save_psmi, save_vocabulary, tfidf_weights, GeneratorConfig, KmeansParams,
};
use visim::{build_psmi_index, Error, SimilarityThreshold};

#[derive(Parser)]
#[command(name = "visim", version, about = "Image similarity over weighted bags of visual words")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads for index builds and evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Write CSV output here instead of stdout.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic vocabulary and image set with planted duplicates.
    Gen {
        #[arg(long)]
        vocab_out: PathBuf,
        #[arg(long)]
        images_out: PathBuf,
        #[arg(long, default_value_t = 1024)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        d: usize,
        /// Total images, duplicates included.
        #[arg(long, default_value_t = 1000)]
        images: usize,
        /// Word draws per base image.
        #[arg(long, default_value_t = 40)]
        words: usize,
        #[arg(long, default_value_t = 1.0)]
        zipf: f64,
        #[arg(long, default_value_t = 0.1)]
        dup_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
    },
    /// Cluster raw features into a vocabulary (spherical k-means).
    BuildVocab {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        vocab_out: PathBuf,
        /// Also write the tf-idf weighted images of the training features.
        #[arg(long)]
        images_out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Assign raw features to an existing vocabulary and weight by tf-idf.
    Quantize {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the offline similar-word index for a vocabulary.
    BuildPsmi {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        mu0: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Similarity of image A to image B.
    Sim {
        #[arg(long, default_value = "smin")]
        algo: String,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, default_value_t = 0.7)]
        mu0: f64,
        a: String,
        b: String,
    },
    /// Time the matchers on synthetic pairs.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "smin,smii,psmi")]
        algos: Vec<String>,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, value_delimiter = ',', default_value = "40")]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "40")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        d: usize,
        #[arg(long, default_value_t = 1024)]
        k: usize,
        #[arg(long, default_value_t = 0.7)]
        mu0: f64,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 1.0)]
        zipf: f64,
    },
    /// Near-duplicate retrieval hit rate over a ρ grid.
    EvalHitrate {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "psmi,baseline")]
        algos: Vec<String>,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.4,0.8")]
        rhos: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        top_k: usize,
        #[arg(long, default_value_t = 0.7)]
        mu0: f64,
    },
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) | Error::Contract(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn algorithms(names: &[String]) -> Result<Vec<Algorithm>, Failure> {
    names
        .iter()
        .map(|s| s.trim().parse::<Algorithm>().map_err(|e| usage(e.to_string())))
        .collect()
}

fn csv_sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(Error::from)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn run(cli: Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| usage(e.to_string()))?;
    match cli.command {
        Command::Gen {
            vocab_out,
            images_out,
            k,
            d,
            images,
            words,
            zipf,
            dup_fraction,
            rho,
        } => {
            let config = GeneratorConfig {
                seed: cli.seed,
                k,
                d,
                image_count: images,
                words_per_image: words,
                zipf_exponent: zipf,
                duplicate_fraction: dup_fraction,
                rho,
            };
            let ds = generate_synthetic(&config)?;
            save_vocabulary(ds.vocab.as_ref().expect("generator attaches a vocabulary"), &vocab_out)?;
            save_images(&ds, &images_out)?;
            println!(
                "generated {} images ({} duplicates) over {k} words of dimension {d}: {}, {}",
                ds.len(),
                ds.ground_truth().len(),
                show(&vocab_out),
                show(&images_out)
            );
        }
        Command::BuildVocab {
            features,
            k,
            vocab_out,
            images_out,
            max_iter,
        } => {
            let sets = load_features(&features)?;
            let mut params = KmeansParams::new(k, cli.seed);
            params.max_iterations = max_iter;
            let q = kmeans_quantize(&sets, params)?;
            save_vocabulary(&q.vocab, &vocab_out)?;
            if let Some(path) = &images_out {
                save_images(&tfidf_weights(&q.dataset)?, path)?;
            }
            println!(
                "vocabulary of {k} words from {} images, {} passes, mean cosine {:.6}: {}",
                sets.len(),
                q.objective.len(),
                q.objective.last().copied().unwrap_or(0.0),
                show(&vocab_out)
            );
        }
        Command::Quantize { features, vocab, out } => {
            let vocab = load_vocabulary(&vocab)?;
            let ds = tfidf_weights(&assign_to_vocabulary(&load_features(&features)?, &vocab)?)?;
            save_images(&ds, &out)?;
            println!("quantized {} images: {}", ds.len(), show(&out));
        }
        Command::BuildPsmi { vocab, mu0, out } => {
            let vocab = load_vocabulary(&vocab)?;
            let start = Instant::now();
            let index = build_psmi_index(&vocab, SimilarityThreshold::new(mu0)?)?;
            let entries: usize = index.lists().map(|(_, _, l)| l.len()).sum();
            save_psmi(&index, &out)?;
            println!(
                "indexed {} words, {entries} entries, mu0 {mu0}, {:.1} ms: {}",
                index.len(),
                start.elapsed().as_secs_f64() * 1e3,
                show(&out)
            );
        }
        Command::Sim {
            algo,
            images,
            vocab,
            index,
            mu0,
            a,
            b,
        } => {
            let algo: Algorithm = algo.parse().map_err(|e: Error| usage(e.to_string()))?;
            if algo == Algorithm::Psmi && index.is_none() {
                return Err(usage("psmi needs --index"));
            }
            let threshold = SimilarityThreshold::new(mu0)?;
            let vocab = vocab.map(load_vocabulary).transpose()?;
            let index = index.map(|p| load_psmi(p, vocab.as_ref())).transpose()?;
            let ds = load_images(&images, vocab)?;
            let image = |id: &str| -> Result<_, Failure> {
                let r = ds.record(id).ok_or_else(|| Failure {
                    code: 1,
                    message: format!("no image '{id}' in {}", show(&images)),
                })?;
                Ok(ds.image_object(r)?)
            };
            let s = score(algo, &image(&a)?, &image(&b)?, threshold, index.as_ref())?;
            println!("{s:.6}");
        }
        Command::Bench {
            algos,
            pairs,
            m,
            n,
            d,
            k,
            mu0,
            reps,
            zipf,
        } => {
            let config = BenchConfig {
                algorithms: algorithms(&algos)?,
                pairs,
                m,
                n,
                d,
                k,
                mu0,
                seed: cli.seed,
                repetitions: reps,
                zipf_exponent: zipf,
            };
            let rows = run_bench(&config)?;
            write_bench_csv(&rows, csv_sink(&cli.csv)?)?;
            if let Some(p) = &cli.csv {
                println!("{} benchmark rows: {}", rows.len(), show(p));
            }
        }
        Command::EvalHitrate {
            images,
            vocab,
            index,
            algos,
            queries,
            rhos,
            top_k,
            mu0,
        } => {
            let vocab = load_vocabulary(&vocab)?;
            let index = index.map(|p| load_psmi(p, Some(&vocab))).transpose()?;
            let ds = load_images(&images, Some(vocab))?;
            let config = HitRateConfig {
                algorithms: algorithms(&algos)?,
                query_count: queries,
                rhos,
                top_k,
                mu0,
                seed: cli.seed,
            };
            let rows = run_hitrate(&ds, &config, index.as_ref())?;
            write_hitrate_csv(&rows, csv_sink(&cli.csv)?)?;
            if let Some(p) = &cli.csv {
                println!("{} hit-rate rows: {}", rows.len(), show(p));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("visim: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
