//! Regenerates `include/povm.h` from the public extern "C" surface. The
//! header is committed, so a failed generation (for example in an offline
//! environment missing cbindgen's toolchain support) only leaves the
//! existing file in place.

use std::env;
use std::path::Path;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    let header = Path::new(&crate_dir).join("include").join("povm.h");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(&header);
        }
        Err(err) => {
            println!("cargo:warning=skipped header generation: {err}");
        }
    }
}
