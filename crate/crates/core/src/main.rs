fn main() {
    std::process::exit(poisson_forest::cli::run(std::env::args_os()));
}
