// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(melt_tensor::cli::run(std::env::args_os()));
}
