//! A small benchmark run through the command-line entry point, then the
//! summary recomputed from the CSV rows.

use clap::Parser;
use quietpath::cli::{rows_from_csv, run, summarize, Cli};

fn main() -> Result<(), quietpath::Error> {
    let dir = std::env::temp_dir().join("quietpath-example");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("bench.csv");
    let summary = dir.join("bench.json");
    let args = [
        "quietpath",
        "benchmark",
        "--zones",
        "4",
        "--scenarios",
        "5",
        "--seed",
        "1",
        "--out",
        csv.to_str().expect("utf-8 path"),
        "--summary",
        summary.to_str().expect("utf-8 path"),
    ];
    run(Cli::parse_from(args))?;
    let rows = rows_from_csv(&std::fs::read_to_string(&csv)?)?;
    for r in &rows {
        println!("{:>2} {:<9?} {:<8} {:?}", r.instance, r.method, r.status, r.cost);
    }
    println!("{}", serde_json::to_string_pretty(&summarize(&rows))?);
    Ok(())
}
