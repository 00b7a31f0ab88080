fn main() {
    std::process::exit(kfarm::cli::dispatch(std::env::args_os()));
}
