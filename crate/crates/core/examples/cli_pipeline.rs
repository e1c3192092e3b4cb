// The command-line pipeline driven in-process: simulate a day of book
// data, ingest it, fit the models and run the backtest.

use std::fs;

use gchp::cli::main_with_args;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("out");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            r#"seed = 11
out = {out:?}

[data]
inputs = [{book:?}]
depth = 5

[session]
open = "09:00"
close = "15:00"

[model]
fit_starts = 4

[predict]
method = "monte-carlo"
paths = 50
"#,
            out = out.display().to_string(),
            book = out.join("simulated/book.csv").display().to_string(),
        ),
    )?;
    for cmd in ["simulate", "ingest", "diagnose", "fit", "backtest"] {
        let code = main_with_args(["gchp", cmd, "--config", config.to_str().unwrap()]);
        if code != 0 {
            return Err(format!("`gchp {cmd}` exited with {code}").into());
        }
    }
    let summary = fs::read_to_string(out.join("fit/summary.csv"))?;
    print!("{summary}");
    print!("{}", fs::read_to_string(out.join("backtest/confusion.csv"))?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
