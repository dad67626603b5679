fn main() {
    std::process::exit(serc::cli::dispatch(std::env::args()));
}
