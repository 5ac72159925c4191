fn main() {
    std::process::exit(mdtree::cli::run(std::env::args_os()));
}
