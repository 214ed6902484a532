// Links the reference BLAS/LAPACK archives statically. Override the search
// directories with LAPACK_LIB_DIR / BLAS_LIB_DIR.
fn main() {
    for (var, default, lib) in [
        ("LAPACK_LIB_DIR", "/usr/lib/x86_64-linux-gnu/lapack", "lapack"),
        ("BLAS_LIB_DIR", "/usr/lib/x86_64-linux-gnu/blas", "blas"),
    ] {
        println!("cargo:rerun-if-env-changed={var}");
        let dir = std::env::var(var).unwrap_or_else(|_| default.to_string());
        println!("cargo:rustc-link-search=native={dir}");
        println!("cargo:rustc-link-lib=static={lib}");
    }
    println!("cargo:rustc-link-lib=dylib=gfortran");
}
