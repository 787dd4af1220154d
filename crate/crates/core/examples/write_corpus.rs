//! Writes the bundled scenes as 16-bit PNGs.
//!
//! ```text
//! cargo run -p lowlight-core --example write_corpus -- DIR [SIZE]
//! ```

use std::path::PathBuf;

use lowlight_core::fixtures::corpus;
use lowlight_core::io::{save_png, PngDepth};

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: write_corpus DIR [SIZE]");
        std::process::exit(1);
    };
    let size: usize = match args.next().map(|s| s.parse()) {
        None => 256,
        Some(Ok(n)) if n > 0 => n,
        Some(_) => {
            eprintln!("SIZE must be a positive integer");
            std::process::exit(1);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("{}: {e}", dir.display());
        std::process::exit(2);
    }
    for (name, image) in corpus(size, size) {
        let path = dir.join(format!("{name}.png"));
        if let Err(e) = save_png(&image, &path, PngDepth::Sixteen) {
            eprintln!("{e}");
            std::process::exit(2);
        }
        println!("{}", path.display());
    }
}
