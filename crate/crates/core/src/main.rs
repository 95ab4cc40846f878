fn main() {
    std::process::exit(stein_lab::cli::dispatch(std::env::args_os()));
}
