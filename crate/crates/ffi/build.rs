fn main() {
    // Header generation is opt-in so offline builds use the committed header:
    //   cargo build -p decotime-ffi --features generate-header
    #[cfg(feature = "generate-header")]
    {
        let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
        let bindings = cbindgen::generate(&crate_dir).expect("cbindgen generation failed");
        bindings.write_to_file(format!("{crate_dir}/include/decotime.h"));
    }
}
