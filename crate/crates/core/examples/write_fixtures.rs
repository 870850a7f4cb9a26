// SPDX-License-Identifier: Apache-2.0

//! Regenerates the MELT1 files under `fixtures/`.

use std::fs::File;
use std::io::BufWriter;

use melt_tensor::fixtures::{bundled, fixtures_dir};
use melt_tensor::tensor::write_tensor;

fn main() -> melt_tensor::Result<()> {
    let dir = fixtures_dir();
    std::fs::create_dir_all(&dir)?;
    for (name, tensor) in bundled()? {
        let path = dir.join(name);
        write_tensor(&tensor, BufWriter::new(File::create(&path)?))?;
        println!("wrote {} ({})", path.display(), tensor.shape());
    }
    Ok(())
}
