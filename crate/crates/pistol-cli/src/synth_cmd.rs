//! The `synth` subcommand: write synthetic LIBSVM train/test files. The
//! generator parameters go into a `#` comment header, which the parser
//! skips, so the files round-trip. Same seed, byte-identical files.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use pistol::data::{synth_margin_stream, write_libsvm, Dataset};

use crate::CliError;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Training examples
    #[arg(long)]
    n: usize,
    /// Test examples
    #[arg(long)]
    test_n: usize,
    /// Dimension
    #[arg(long)]
    d: u32,
    /// Reject points with |w*·x| below this
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    /// Label flip probability, in [0, 0.5)
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_test: PathBuf,
}

fn write_file(path: &PathBuf, header: &str, ds: &Dataset) -> Result<(), CliError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(header.as_bytes());
    write_libsvm(ds, &mut buf).expect("writing to Vec cannot fail");
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(CliError::Runtime)?;
    file.write_all(&buf)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Runtime)?;
    Ok(())
}

pub fn run(args: SynthArgs) -> Result<i32, CliError> {
    let all = synth_margin_stream(
        args.seed,
        args.n + args.test_n,
        args.d,
        args.margin,
        args.flip,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut train_set = all.clone();
    let mut test_set = all;
    test_set.examples = train_set.examples.split_off(args.n);

    let meta = |role: &str, count: usize| {
        format!(
            "# synth role={role} n={count} d={} margin={} flip={} seed={}\n",
            args.d, args.margin, args.flip, args.seed
        )
    };
    write_file(&args.out_train, &meta("train", args.n), &train_set)?;
    write_file(&args.out_test, &meta("test", args.test_n), &test_set)?;
    Ok(0)
}
