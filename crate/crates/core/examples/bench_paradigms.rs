// SPDX-License-Identifier: Apache-2.0

//! Times element-wise, vector-wise and broadcast kernel application plus
//! worker scaling. Pass a cube side as the first argument (default 32).

use melt_tensor::bench::{bench_paradigms, bench_parallel, paradigm_summary, parallel_summary, write_csv, Workload};
use melt_tensor::melt::DEFAULT_MEMORY_CAP;

fn main() -> melt_tensor::Result<()> {
    let size = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let w = Workload::gaussian(&[size; 3], 3, 0, DEFAULT_MEMORY_CAP)?;

    let records = bench_paradigms(&w, 10)?;
    println!("{}", paradigm_summary(&records));

    let records = bench_parallel(&w, 4, 10)?;
    println!("{}", parallel_summary(&records));

    let path = std::env::temp_dir().join("parallel.csv");
    write_csv(&records, std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
