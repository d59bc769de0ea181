fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let out_path = std::path::Path::new(&crate_dir)
        .join("include")
        .join("aoi_ffi.h");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        header: Some("/* C interface to the age-of-information scheduling library. */".into()),
        include_guard: Some("AOI_FFI_H".into()),
        cpp_compat: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            ..Default::default()
        },
        ..Default::default()
    };

    cbindgen::Builder::new()
        .with_config(config)
        .with_crate(&crate_dir)
        .generate()
        .expect("unable to generate C bindings")
        .write_to_file(out_path);

    println!("cargo:rerun-if-changed=src/lib.rs");
}
