fn main() {
    std::process::exit(bearing_game::cli::run(std::env::args_os()));
}
