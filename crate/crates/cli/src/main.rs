fn main() {
    std::process::exit(phase_manifold_cli::run(std::env::args_os()));
}
