fn main() {
    std::process::exit(rank_diversity::cli::run(std::env::args_os()));
}
