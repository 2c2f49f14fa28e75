fn main() {
    env_logger::init();
    std::process::exit(ami_screen::cli::run());
}
