fn main() {
    std::process::exit(vcn::cli::run(std::env::args_os()));
}
