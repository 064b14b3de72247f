fn main() {
    std::process::exit(pkgnet::cli::run(std::env::args_os()));
}
