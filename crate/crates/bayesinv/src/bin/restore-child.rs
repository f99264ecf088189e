//! Reference external restorator.
//!
//! Usage: `restore-child MODE [FLAGS]` with MODE one of `identity`, `nonneg`,
//! `l1` (gamma = 10 s), `tv` (weight 5 s). Flags for testing the error paths:
//! `--exit-after N` exits after N replies, `--error` answers every request
//! with `ERR`, `--short` replies with one value too few.

use std::io::{self, BufWriter};
use std::process::ExitCode;

use bayesinv::external::serve;
use bayesinv_core::proximal::{soft_threshold, tv1d_denoise};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(mode) = args.first().cloned() else {
        eprintln!("usage: restore-child identity|nonneg|l1|tv [--exit-after N] [--error] [--short]");
        return ExitCode::from(2);
    };
    let exit_after = args
        .iter()
        .position(|a| a == "--exit-after")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse::<usize>().ok());
    let always_error = args.iter().any(|a| a == "--error");
    let short = args.iter().any(|a| a == "--short");
    let restore = |x: &[f64], s: f64| -> Vec<f64> {
        match mode.as_str() {
            "nonneg" => x.iter().map(|v| v.max(0.0)).collect(),
            "l1" => x.iter().map(|v| soft_threshold(*v, 10.0 * s)).collect(),
            "tv" => tv1d_denoise(x, 5.0 * s),
            _ => x.to_vec(),
        }
    };
    if !matches!(mode.as_str(), "identity" | "nonneg" | "l1" | "tv") {
        eprintln!("unknown mode '{mode}'");
        return ExitCode::from(2);
    }
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut output = BufWriter::new(io::stdout().lock());
    let mut served = 0usize;
    let result = serve(&mut input, &mut output, |x, s| {
        if exit_after == Some(served) {
            std::process::exit(1);
        }
        served += 1;
        if always_error {
            return Err("refusing by request".into());
        }
        let mut y = restore(x, s);
        if short {
            y.pop();
        }
        Ok(y)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("restore-child: {e}");
            ExitCode::FAILURE
        }
    }
}
